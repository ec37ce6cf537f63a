// Copyright 2026 The wsseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "wsseg/image.hpp"
#include "wsseg/parallel.hpp"
#include "wsseg/rng.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg::nn {

/// Learnable tensor plus its gradient accumulator. `group` selects the
/// optimizer parameter group (0 = backbone/pretrained, 1 = appended head).
struct Param {
    Tensor value;
    Tensor grad;
    int group = 0;

    void init(int n, int c, int h, int w) {
        value = Tensor(n, c, h, w);
        grad = Tensor(n, c, h, w);
    }
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(std::vector<Param*>& out) { (void)out; }
    virtual const char* kind() const = 0;
};

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

class Conv2d : public Layer {
public:
    Conv2d(int in_ch, int out_ch, int ksize, Rng& rng, int stride = 1, int dilation = 1,
           int pad = -1, int group = 0)
        : in_(in_ch), out_(out_ch), k_(ksize), s_(stride), d_(dilation) {
        p_ = pad >= 0 ? pad : dilation * (ksize - 1) / 2;
        weight_.init(out_ch, in_ch, ksize, ksize);
        bias_.init(1, out_ch, 1, 1);
        weight_.group = bias_.group = group;
        float std = std::sqrt(2.f / float(in_ch * ksize * ksize));  // He init
        for (float& v : weight_.value.v) v = float(rng.normal()) * std;
    }

    Tensor forward(const Tensor& x, bool training) override {
        WSSEG_CHECK(x.c == in_, "Conv2d: channel mismatch");
        if (training) x_ = x;
        int oh = out_dim(x.h), ow = out_dim(x.w);
        Tensor y(x.n, out_, oh, ow);
        const int H = x.h, W = x.w;
        parallel_for(int64_t(x.n) * out_, [&](int64_t b, int64_t e) {
            for (int64_t idx = b; idx < e; ++idx) {
                int n = int(idx / out_), oc = int(idx % out_);
                float* yp = y.plane(n, oc);
                float bv = bias_.value.v[size_t(oc)];
                for (int64_t i = 0; i < y.plane_size(); ++i) yp[i] = bv;
                for (int ic = 0; ic < in_; ++ic) {
                    const float* xp = x.plane(n, ic);
                    for (int ky = 0; ky < k_; ++ky)
                        for (int kx = 0; kx < k_; ++kx) {
                            float wv = weight_.value.at(oc, ic, ky, kx);
                            if (wv == 0.f) continue;
                            int ox0, ox1;
                            x_range(kx, W, ow, ox0, ox1);
                            for (int oy = 0; oy < oh; ++oy) {
                                int iy = oy * s_ - p_ + ky * d_;
                                if (iy < 0 || iy >= H) continue;
                                const float* xrow = xp + int64_t(iy) * W;
                                float* yrow = yp + int64_t(oy) * ow;
                                if (s_ == 1) {
                                    int shift = kx * d_ - p_;
                                    for (int ox = ox0; ox <= ox1; ++ox)
                                        yrow[ox] += wv * xrow[ox + shift];
                                } else {
                                    for (int ox = ox0; ox <= ox1; ++ox)
                                        yrow[ox] += wv * xrow[ox * s_ - p_ + kx * d_];
                                }
                            }
                        }
                }
            }
        });
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        WSSEG_CHECK(!x_.empty(), "Conv2d::backward before forward(training)");
        const Tensor& x = x_;
        int oh = dy.h, ow = dy.w;
        const int H = x.h, W = x.w;
        Tensor dx(x.n, in_, H, W);

        // grad wrt input: each sample owned by one thread
        parallel_for(x.n, [&](int64_t b, int64_t e) {
            for (int64_t n = b; n < e; ++n) {
                for (int oc = 0; oc < out_; ++oc) {
                    const float* dyp = dy.plane(int(n), oc);
                    for (int ic = 0; ic < in_; ++ic) {
                        float* dxp = dx.plane(int(n), ic);
                        for (int ky = 0; ky < k_; ++ky)
                            for (int kx = 0; kx < k_; ++kx) {
                                float wv = weight_.value.at(oc, ic, ky, kx);
                                if (wv == 0.f) continue;
                                int ox0, ox1;
                                x_range(kx, W, ow, ox0, ox1);
                                for (int oy = 0; oy < oh; ++oy) {
                                    int iy = oy * s_ - p_ + ky * d_;
                                    if (iy < 0 || iy >= H) continue;
                                    float* dxrow = dxp + int64_t(iy) * W;
                                    const float* dyrow = dyp + int64_t(oy) * ow;
                                    if (s_ == 1) {
                                        int shift = kx * d_ - p_;
                                        for (int ox = ox0; ox <= ox1; ++ox)
                                            dxrow[ox + shift] += wv * dyrow[ox];
                                    } else {
                                        for (int ox = ox0; ox <= ox1; ++ox)
                                            dxrow[ox * s_ - p_ + kx * d_] += wv * dyrow[ox];
                                    }
                                }
                            }
                    }
                }
            }
        });

        // grad wrt weights/bias: each output channel owned by one thread
        parallel_for(out_, [&](int64_t b, int64_t e) {
            for (int64_t oc = b; oc < e; ++oc) {
                double db = 0.0;
                for (int n = 0; n < x.n; ++n) {
                    const float* dyp = dy.plane(n, int(oc));
                    for (int64_t i = 0; i < dy.plane_size(); ++i) db += dyp[i];
                    for (int ic = 0; ic < in_; ++ic) {
                        const float* xp = x.plane(n, ic);
                        for (int ky = 0; ky < k_; ++ky)
                            for (int kx = 0; kx < k_; ++kx) {
                                int ox0, ox1;
                                x_range(kx, W, ow, ox0, ox1);
                                float acc = 0.f;
                                for (int oy = 0; oy < oh; ++oy) {
                                    int iy = oy * s_ - p_ + ky * d_;
                                    if (iy < 0 || iy >= H) continue;
                                    const float* xrow = xp + int64_t(iy) * W;
                                    const float* dyrow = dyp + int64_t(oy) * ow;
                                    if (s_ == 1) {
                                        int shift = kx * d_ - p_;
                                        for (int ox = ox0; ox <= ox1; ++ox)
                                            acc += dyrow[ox] * xrow[ox + shift];
                                    } else {
                                        for (int ox = ox0; ox <= ox1; ++ox)
                                            acc += dyrow[ox] * xrow[ox * s_ - p_ + kx * d_];
                                    }
                                }
                                weight_.grad.at(int(oc), ic, ky, kx) += acc;
                            }
                    }
                }
                bias_.grad.v[size_t(oc)] += float(db);
            }
        });
        return dx;
    }

    void collect_params(std::vector<Param*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }
    const char* kind() const override { return "conv2d"; }

    int out_dim(int in) const { return (in + 2 * p_ - d_ * (k_ - 1) - 1) / s_ + 1; }

private:
    // valid output x-range for a kernel column: 0 <= ox*s - p + kx*d <= W-1
    void x_range(int kx, int W, int ow, int& ox0, int& ox1) const {
        int t = p_ - kx * d_;
        ox0 = t <= 0 ? 0 : (t + s_ - 1) / s_;
        int hi = (W - 1 + t) / s_;
        ox1 = std::min(ow - 1, hi);
        if (ox1 < ox0) { ox0 = 0; ox1 = -1; }
    }

    int in_, out_, k_, s_, d_, p_;
    Param weight_, bias_;
    Tensor x_;
};

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override {
        Tensor y = x;
        for (float& v : y.v) v = v > 0.f ? v : 0.f;
        if (training) mask_ = x;
        return y;
    }
    Tensor backward(const Tensor& dy) override {
        Tensor dx = dy;
        for (int64_t i = 0; i < dx.size(); ++i)
            if (mask_.v[size_t(i)] <= 0.f) dx.v[size_t(i)] = 0.f;
        return dx;
    }
    const char* kind() const override { return "relu"; }

private:
    Tensor mask_;
};

// ---------------------------------------------------------------------------
// MaxPool 2x2 stride 2
// ---------------------------------------------------------------------------

class MaxPool2 : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override {
        WSSEG_CHECK(x.h % 2 == 0 && x.w % 2 == 0, "MaxPool2: odd input dims");
        int oh = x.h / 2, ow = x.w / 2;
        Tensor y(x.n, x.c, oh, ow);
        if (training) {
            argmax_.assign(size_t(y.size()), 0);
            in_h_ = x.h;
            in_w_ = x.w;
            in_n_ = x.n;
            in_c_ = x.c;
        }
        for (int n = 0; n < x.n; ++n)
            for (int c = 0; c < x.c; ++c) {
                const float* xp = x.plane(n, c);
                float* yp = y.plane(n, c);
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        int best = (2 * oy) * x.w + 2 * ox;
                        float bv = xp[best];
                        for (int dy2 = 0; dy2 < 2; ++dy2)
                            for (int dx2 = 0; dx2 < 2; ++dx2) {
                                int idx = (2 * oy + dy2) * x.w + 2 * ox + dx2;
                                if (xp[idx] > bv) { bv = xp[idx]; best = idx; }
                            }
                        yp[oy * ow + ox] = bv;
                        if (training)
                            argmax_[size_t(((int64_t(n) * x.c + c) * oh + oy) * ow + ox)] = best;
                    }
            }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(in_n_, in_c_, in_h_, in_w_);
        int oh = dy.h, ow = dy.w;
        for (int n = 0; n < dy.n; ++n)
            for (int c = 0; c < dy.c; ++c) {
                const float* dyp = dy.plane(n, c);
                float* dxp = dx.plane(n, c);
                for (int64_t i = 0; i < dy.plane_size(); ++i)
                    dxp[argmax_[size_t((int64_t(n) * dy.c + c) * oh * ow + i)]] += dyp[i];
            }
        return dx;
    }
    const char* kind() const override { return "maxpool2"; }

private:
    std::vector<int> argmax_;
    int in_h_ = 0, in_w_ = 0, in_n_ = 0, in_c_ = 0;
};

// ---------------------------------------------------------------------------
// GroupNorm
// ---------------------------------------------------------------------------

class GroupNorm : public Layer {
public:
    GroupNorm(int channels, int groups, int group = 0, float eps = 1e-5f)
        : c_(channels), g_(groups), eps_(eps) {
        WSSEG_CHECK(channels % groups == 0, "GroupNorm: channels % groups != 0");
        gamma_.init(1, channels, 1, 1);
        beta_.init(1, channels, 1, 1);
        gamma_.group = beta_.group = group;
        gamma_.value.fill(1.f);
    }

    Tensor forward(const Tensor& x, bool training) override {
        WSSEG_CHECK(x.c == c_, "GroupNorm: channel mismatch");
        Tensor y(x.n, x.c, x.h, x.w);
        int cg = c_ / g_;
        int64_t m = int64_t(cg) * x.h * x.w;
        if (training) {
            xhat_ = Tensor(x.n, x.c, x.h, x.w);
            inv_std_.assign(size_t(x.n) * g_, 0.f);
        }
        for (int n = 0; n < x.n; ++n)
            for (int g = 0; g < g_; ++g) {
                const float* xs = x.plane(n, g * cg);
                double sum = 0, sq = 0;
                for (int64_t i = 0; i < m; ++i) {
                    sum += xs[i];
                    sq += double(xs[i]) * xs[i];
                }
                double mean = sum / double(m);
                double var = sq / double(m) - mean * mean;
                float inv = float(1.0 / std::sqrt(var + eps_));
                if (training) inv_std_[size_t(n) * g_ + g] = inv;
                for (int cc = 0; cc < cg; ++cc) {
                    int ch = g * cg + cc;
                    const float* xp = x.plane(n, ch);
                    float* yp = y.plane(n, ch);
                    float ga = gamma_.value.v[size_t(ch)], be = beta_.value.v[size_t(ch)];
                    float* xhp = training ? xhat_.plane(n, ch) : nullptr;
                    for (int64_t i = 0; i < x.plane_size(); ++i) {
                        float xh = (xp[i] - float(mean)) * inv;
                        if (xhp) xhp[i] = xh;
                        yp[i] = ga * xh + be;
                    }
                }
            }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        WSSEG_CHECK(!xhat_.empty(), "GroupNorm::backward before forward(training)");
        const Tensor& xh = xhat_;
        Tensor dx(dy.n, dy.c, dy.h, dy.w);
        int cg = c_ / g_;
        int64_t plane = dy.plane_size();
        int64_t m = int64_t(cg) * plane;
        for (int n = 0; n < dy.n; ++n)
            for (int g = 0; g < g_; ++g) {
                double sum_dxhat = 0, sum_dxhat_xhat = 0;
                for (int cc = 0; cc < cg; ++cc) {
                    int ch = g * cg + cc;
                    const float* dyp = dy.plane(n, ch);
                    const float* xhp = xh.plane(n, ch);
                    float ga = gamma_.value.v[size_t(ch)];
                    double dg = 0, db = 0;
                    for (int64_t i = 0; i < plane; ++i) {
                        float dxhat = dyp[i] * ga;
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += double(dxhat) * xhp[i];
                        dg += double(dyp[i]) * xhp[i];
                        db += dyp[i];
                    }
                    gamma_.grad.v[size_t(ch)] += float(dg);
                    beta_.grad.v[size_t(ch)] += float(db);
                }
                float inv = inv_std_[size_t(n) * g_ + g];
                float mean_dxhat = float(sum_dxhat / double(m));
                float mean_dxhat_xhat = float(sum_dxhat_xhat / double(m));
                for (int cc = 0; cc < cg; ++cc) {
                    int ch = g * cg + cc;
                    const float* dyp = dy.plane(n, ch);
                    const float* xhp = xh.plane(n, ch);
                    float* dxp = dx.plane(n, ch);
                    float ga = gamma_.value.v[size_t(ch)];
                    for (int64_t i = 0; i < plane; ++i) {
                        float dxhat = dyp[i] * ga;
                        dxp[i] = inv * (dxhat - mean_dxhat - xhp[i] * mean_dxhat_xhat);
                    }
                }
            }
        return dx;
    }

    void collect_params(std::vector<Param*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }
    const char* kind() const override { return "groupnorm"; }

private:
    int c_, g_;
    float eps_;
    Param gamma_, beta_;
    Tensor xhat_;
    std::vector<float> inv_std_;
};

// ---------------------------------------------------------------------------
// Bilinear 2x upsample
// ---------------------------------------------------------------------------

class Upsample2x : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override {
        if (training) { in_h_ = x.h; in_w_ = x.w; }
        return resize_bilinear(x, x.h * 2, x.w * 2);
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(dy.n, dy.c, in_h_, in_w_);
        double sy = double(in_h_) / dy.h, sx = double(in_w_) / dy.w;
        std::vector<int> x0(size_t(dy.w)), x1(size_t(dy.w));
        std::vector<float> fx(size_t(dy.w));
        for (int x = 0; x < dy.w; ++x) detail::bilinear_prep(dy.w, in_w_, x, sx, x0[size_t(x)], x1[size_t(x)], fx[size_t(x)]);
        parallel_for(int64_t(dy.n) * dy.c, [&](int64_t b, int64_t e) {
            for (int64_t p = b; p < e; ++p) {
                const float* dyp = dy.v.data() + p * dy.plane_size();
                float* dxp = dx.v.data() + p * dx.plane_size();
                for (int y = 0; y < dy.h; ++y) {
                    int y0, y1;
                    float fy;
                    detail::bilinear_prep(dy.h, in_h_, y, sy, y0, y1, fy);
                    for (int x = 0; x < dy.w; ++x) {
                        float g = dyp[int64_t(y) * dy.w + x];
                        float w00 = (1 - fy) * (1 - fx[size_t(x)]), w01 = (1 - fy) * fx[size_t(x)];
                        float w10 = fy * (1 - fx[size_t(x)]), w11 = fy * fx[size_t(x)];
                        dxp[int64_t(y0) * in_w_ + x0[size_t(x)]] += w00 * g;
                        dxp[int64_t(y0) * in_w_ + x1[size_t(x)]] += w01 * g;
                        dxp[int64_t(y1) * in_w_ + x0[size_t(x)]] += w10 * g;
                        dxp[int64_t(y1) * in_w_ + x1[size_t(x)]] += w11 * g;
                    }
                }
            }
        });
        return dx;
    }
    const char* kind() const override { return "upsample2x"; }

private:
    int in_h_ = 0, in_w_ = 0;
};

// ---------------------------------------------------------------------------
// Sequential + residual block
// ---------------------------------------------------------------------------

class Sequential : public Layer {
public:
    Sequential() = default;

    void add(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }
    template <typename L, typename... Args>
    L* emplace(Args&&... args) {
        auto l = std::make_unique<L>(std::forward<Args>(args)...);
        L* ptr = l.get();
        layers_.push_back(std::move(l));
        return ptr;
    }

    Tensor forward(const Tensor& x, bool training) override {
        Tensor cur = x;
        for (auto& l : layers_) cur = l->forward(cur, training);
        return cur;
    }
    Tensor backward(const Tensor& dy) override {
        Tensor cur = dy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
        return cur;
    }
    void collect_params(std::vector<Param*>& out) override {
        for (auto& l : layers_) l->collect_params(out);
    }
    const char* kind() const override { return "sequential"; }

    size_t size() const { return layers_.size(); }
    Layer* at(size_t i) { return layers_[i].get(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// y = relu(x + gn2(conv2(relu(gn1(conv1(x)))))), 3x3 convs with optional
/// dilation.
class ResidualBlock : public Layer {
public:
    ResidualBlock(int channels, Rng& rng, int dilation = 1, int gn_groups = 8, int group = 0)
        : conv1_(channels, channels, 3, rng, 1, dilation, -1, group),
          conv2_(channels, channels, 3, rng, 1, dilation, -1, group),
          gn1_(channels, gn_groups, group),
          gn2_(channels, gn_groups, group) {}

    Tensor forward(const Tensor& x, bool training) override {
        Tensor branch = relu1_.forward(gn1_.forward(conv1_.forward(x, training), training), training);
        branch = gn2_.forward(conv2_.forward(branch, training), training);
        Tensor pre = x;
        for (int64_t i = 0; i < pre.size(); ++i) pre.v[size_t(i)] += branch.v[size_t(i)];
        if (training) pre_ = pre;
        for (float& v : pre.v) v = v > 0.f ? v : 0.f;
        return pre;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dpre = dy;
        for (int64_t i = 0; i < dpre.size(); ++i)
            if (pre_.v[size_t(i)] <= 0.f) dpre.v[size_t(i)] = 0.f;
        Tensor dbranch = conv1_.backward(gn1_.backward(relu1_.backward(conv2_.backward(gn2_.backward(dpre)))));
        for (int64_t i = 0; i < dpre.size(); ++i) dpre.v[size_t(i)] += dbranch.v[size_t(i)];
        return dpre;
    }

    void collect_params(std::vector<Param*>& out) override {
        conv1_.collect_params(out);
        gn1_.collect_params(out);
        conv2_.collect_params(out);
        gn2_.collect_params(out);
    }
    const char* kind() const override { return "residual"; }

private:
    Conv2d conv1_, conv2_;
    GroupNorm gn1_, gn2_;
    ReLU relu1_;
    Tensor pre_;
};

// ---------------------------------------------------------------------------
// Functional pieces
// ---------------------------------------------------------------------------

inline float sigmoidf(float z) {
    return z >= 0.f ? 1.f / (1.f + std::exp(-z)) : std::exp(z) / (1.f + std::exp(z));
}

/// Spatial global average pool: (n,c,h,w) -> (n,c,1,1).
inline Tensor global_avg_pool(const Tensor& x) {
    Tensor y(x.n, x.c, 1, 1);
    float inv = 1.f / float(x.plane_size());
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const float* p = x.plane(n, c);
            double s = 0;
            for (int64_t i = 0; i < x.plane_size(); ++i) s += p[i];
            y.at(n, c, 0, 0) = float(s) * inv;
        }
    return y;
}

/// Gradient of global_avg_pool: broadcast / (h*w).
inline Tensor global_avg_pool_backward(const Tensor& dlogits, int h, int w) {
    Tensor dx(dlogits.n, dlogits.c, h, w);
    float inv = 1.f / float(int64_t(h) * w);
    for (int n = 0; n < dlogits.n; ++n)
        for (int c = 0; c < dlogits.c; ++c) {
            float g = dlogits.at(n, c, 0, 0) * inv;
            float* p = dx.plane(n, c);
            for (int64_t i = 0; i < dx.plane_size(); ++i) p[i] = g;
        }
    return dx;
}

struct LossResult {
    double loss = 0.0;
    Tensor grad;        // d loss / d logits
    int64_t count = 0;  // elements that contributed
};

/// Per-class sigmoid + binary cross-entropy, mean over all (n, class) pairs.
inline LossResult bce_with_logits(const Tensor& logits, const Tensor& targets) {
    WSSEG_CHECK(logits.same_shape(targets), "bce_with_logits: shape mismatch");
    LossResult res;
    res.grad = Tensor(logits.n, logits.c, logits.h, logits.w);
    int64_t N = logits.size();
    double total = 0;
    for (int64_t i = 0; i < N; ++i) {
        float z = logits.v[size_t(i)], t = targets.v[size_t(i)];
        total += std::max(z, 0.f) - z * t + std::log1p(std::exp(-std::abs(z)));
        res.grad.v[size_t(i)] = (sigmoidf(z) - t) / float(N);
    }
    res.loss = total / double(N);
    res.count = N;
    return res;
}

/// Per-pixel softmax cross-entropy with an ignore value; mean over supervised
/// pixels. count == 0 signals a fully ignored batch (grad is all zeros).
inline LossResult softmax_ce_ignore(const Tensor& logits, const std::vector<LabelMask>& targets,
                                    uint8_t ignore_value = 255) {
    WSSEG_CHECK(int(targets.size()) == logits.n, "softmax_ce: batch mismatch");
    LossResult res;
    res.grad = Tensor(logits.n, logits.c, logits.h, logits.w);
    int K = logits.c;
    std::vector<float> probs(static_cast<size_t>(K));
    double total = 0;
    int64_t count = 0;
    // first pass counts supervised pixels so grads can be scaled in one sweep
    for (int n = 0; n < logits.n; ++n) {
        WSSEG_CHECK(targets[size_t(n)].h == logits.h && targets[size_t(n)].w == logits.w,
                    "softmax_ce: target dims mismatch");
        for (int64_t i = 0; i < logits.plane_size(); ++i)
            if (targets[size_t(n)].v[size_t(i)] != ignore_value) ++count;
    }
    if (count == 0) return res;
    float inv = 1.f / float(count);
    for (int n = 0; n < logits.n; ++n) {
        const LabelMask& t = targets[size_t(n)];
        for (int y = 0; y < logits.h; ++y)
            for (int x = 0; x < logits.w; ++x) {
                uint8_t lab = t.at(y, x);
                if (lab == ignore_value) continue;
                WSSEG_CHECK(int(lab) < K, "softmax_ce: label out of range");
                float mx = logits.at(n, 0, y, x);
                for (int c = 1; c < K; ++c) mx = std::max(mx, logits.at(n, c, y, x));
                double denom = 0;
                for (int c = 0; c < K; ++c) {
                    probs[size_t(c)] = std::exp(logits.at(n, c, y, x) - mx);
                    denom += probs[size_t(c)];
                }
                for (int c = 0; c < K; ++c) {
                    float p = float(probs[size_t(c)] / denom);
                    res.grad.at(n, c, y, x) = (p - (c == int(lab) ? 1.f : 0.f)) * inv;
                }
                total += -(double(logits.at(n, int(lab), y, x)) - mx - std::log(denom));
            }
    }
    res.loss = total / double(count);
    res.count = count;
    return res;
}

}  // namespace wsseg::nn

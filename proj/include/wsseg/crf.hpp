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
#include <string>
#include <vector>

#include "wsseg/cam_types.hpp"
#include "wsseg/parallel.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg {

/// Per-pixel label distribution over {background 0} + foreground class ids.
/// probs is (1, K+1, H, W); at every pixel the channel values sum to 1.
struct ProbField {
    std::string image_id;
    std::vector<int> class_ids;  // class_ids[0] == 0 (background)
    Tensor probs;

    int channels() const { return probs.c; }
};

/// Normalizes each pixel of a channel stack onto the simplex; negative
/// entries are clamped to 0 first, and an all-zero pixel becomes uniform.
inline void renormalize_simplex(Tensor& probs) {
    int64_t plane = probs.plane_size();
    int K = probs.c;
    for (int64_t i = 0; i < plane; ++i) {
        double sum = 0;
        for (int c = 0; c < K; ++c) {
            float& v = probs.v[size_t(c) * plane + i];
            if (v < 0.f) v = 0.f;
            sum += v;
        }
        if (sum <= 0) {
            for (int c = 0; c < K; ++c) probs.v[size_t(c) * plane + i] = 1.f / float(K);
        } else {
            float inv = float(1.0 / sum);
            for (int c = 0; c < K; ++c) probs.v[size_t(c) * plane + i] *= inv;
        }
    }
}

/// Attaches the background channel: bg = (1 - max over class maps)^bg_power,
/// then each pixel is normalized onto the simplex. An empty stack becomes an
/// all-background field.
inline ProbField add_background(const CamStack& stack, double bg_power) {
    WSSEG_CHECK(bg_power > 0, "add_background: bg_power must be positive");
    WSSEG_CHECK(stack.h > 0 && stack.w > 0, "add_background: stack has no dimensions");
    int K = int(stack.class_ids.size());
    ProbField field;
    field.image_id = stack.image_id;
    field.class_ids.push_back(0);
    for (int id : stack.class_ids) field.class_ids.push_back(id);
    field.probs = Tensor(1, K + 1, stack.h, stack.w);

    int64_t plane = int64_t(stack.h) * stack.w;
    for (int64_t i = 0; i < plane; ++i) {
        float best = 0.f;
        for (int k = 0; k < K; ++k) best = std::max(best, stack.maps.v[size_t(k) * plane + i]);
        field.probs.v[size_t(i)] = float(std::pow(double(1.f - best), bg_power));
        for (int k = 0; k < K; ++k)
            field.probs.v[size_t(k + 1) * plane + i] = stack.maps.v[size_t(k) * plane + i];
    }
    renormalize_simplex(field.probs);
    return field;
}

/// Fully-connected CRF parameters: a position+color appearance kernel and a
/// position-only smoothness kernel. The appearance spatial stddev is a
/// reference value at 500 px and is rescaled by max(H, W)/500 at run time;
/// the color stddev lives on the 0..255 scale.
struct CrfParams {
    int iterations = 10;
    double appearance_sigma_spatial = 40.0;
    double appearance_sigma_color = 13.0;
    double appearance_weight = 4.0;
    double smoothness_sigma = 3.0;
    double smoothness_weight = 3.0;
    uint64_t matrix_cache_bytes = 512ull << 20;  // precompute kernel matrix below this

    void validate() const {
        WSSEG_CHECK(iterations >= 0, "crf: iterations must be >= 0");
        WSSEG_CHECK(appearance_sigma_spatial > 0 && appearance_sigma_color > 0 &&
                        smoothness_sigma > 0,
                    "crf: stddevs must be > 0");
        WSSEG_CHECK(appearance_weight >= 0 && smoothness_weight >= 0,
                    "crf: weights must be >= 0");
    }
};

namespace detail {

// Combined row-normalized pairwise kernel:
//   k_app(i,j)  = exp(-|p_i-p_j|^2 / 2s_s^2 - |c_i-c_j|^2 / 2s_c^2)
//   k_smo(i,j)  = exp(-|p_i-p_j|^2 / 2s_m^2)
//   M(i,j)      = w_app * k_app(i,j)/d_app(i) + w_smo * k_smo(i,j)/d_smo(i)
// with d_m(i) = sum_{j != i} k_m(i,j) and M(i,i) = 0. Row normalization keeps
// messages bounded and makes spatially uniform fields map to uniform outputs
// on constant-color images.
struct CrfKernel {
    int h = 0, w = 0;
    double inv2_ss = 0, inv2_sc = 0, inv2_sm = 0;
    double w_app = 0, w_smo = 0;
    std::vector<float> colors;  // 3 per pixel, 0..255 scale
    std::vector<double> d_app, d_smo;
    std::vector<float> cache;  // N*N combined matrix when it fits
    bool cached = false;

    int64_t n() const { return int64_t(h) * w; }

    CrfKernel(const Tensor& image, const CrfParams& p) {
        h = image.h;
        w = image.w;
        double scaled_ss = p.appearance_sigma_spatial * double(std::max(h, w)) / 500.0;
        inv2_ss = 1.0 / (2.0 * scaled_ss * scaled_ss);
        inv2_sc = 1.0 / (2.0 * p.appearance_sigma_color * p.appearance_sigma_color);
        inv2_sm = 1.0 / (2.0 * p.smoothness_sigma * p.smoothness_sigma);
        w_app = p.appearance_weight;
        w_smo = p.smoothness_weight;

        int64_t N = n();
        colors.resize(size_t(N) * 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c)
                    colors[size_t(int64_t(y) * w + x) * 3 + c] = image.at(0, c, y, x) * 255.f;

        d_app.assign(size_t(N), 0.0);
        d_smo.assign(size_t(N), 0.0);
        parallel_for(N, [&](int64_t b, int64_t e) {
            for (int64_t i = b; i < e; ++i) {
                double da = 0, dm = 0;
                for (int64_t j = 0; j < N; ++j) {
                    if (j == i) continue;
                    double ka, km;
                    raw(i, j, ka, km);
                    da += ka;
                    dm += km;
                }
                d_app[size_t(i)] = da;
                d_smo[size_t(i)] = dm;
            }
        });

        if (uint64_t(N) * uint64_t(N) * 4 <= p.matrix_cache_bytes) {
            cache.resize(size_t(N) * size_t(N));
            parallel_for(N, [&](int64_t b, int64_t e) {
                for (int64_t i = b; i < e; ++i) fill_row(i, cache.data() + i * N);
            });
            cached = true;
        }
    }

    void raw(int64_t i, int64_t j, double& k_app, double& k_smo) const {
        int yi = int(i / w), xi = int(i % w);
        int yj = int(j / w), xj = int(j % w);
        double dp = double(yi - yj) * (yi - yj) + double(xi - xj) * (xi - xj);
        const float* ci = &colors[size_t(i) * 3];
        const float* cj = &colors[size_t(j) * 3];
        double dc = 0;
        for (int c = 0; c < 3; ++c) dc += double(ci[c] - cj[c]) * (ci[c] - cj[c]);
        k_smo = std::exp(-dp * inv2_sm);
        k_app = std::exp(-dp * inv2_ss - dc * inv2_sc);
    }

    void fill_row(int64_t i, float* row) const {
        int64_t N = n();
        double na = d_app[size_t(i)] > 0 ? w_app / d_app[size_t(i)] : 0.0;
        double nm = d_smo[size_t(i)] > 0 ? w_smo / d_smo[size_t(i)] : 0.0;
        for (int64_t j = 0; j < N; ++j) {
            if (j == i) {
                row[j] = 0.f;
                continue;
            }
            double ka, km;
            raw(i, j, ka, km);
            row[j] = float(na * ka + nm * km);
        }
    }

    // msg(i,l) = sum_j M(i,j) q(j,l); q and msg are N x K row-major
    void message(const std::vector<float>& q, std::vector<double>& msg, int K) const {
        int64_t N = n();
        parallel_for(N, [&](int64_t b, int64_t e) {
            std::vector<float> scratch;
            if (!cached) scratch.resize(size_t(N));
            for (int64_t i = b; i < e; ++i) {
                const float* row = cached ? cache.data() + i * N : scratch.data();
                if (!cached) fill_row(i, scratch.data());
                std::vector<double> acc(size_t(K), 0.0);
                for (int64_t j = 0; j < N; ++j) {
                    float m = row[j];
                    if (m == 0.f) continue;
                    const float* qj = &q[size_t(j) * K];
                    for (int l = 0; l < K; ++l) acc[size_t(l)] += double(m) * qj[l];
                }
                for (int l = 0; l < K; ++l) msg[size_t(i) * K + l] = acc[size_t(l)];
            }
        });
    }
};

}  // namespace detail

/// Mean-field inference on the fully-connected CRF with Potts compatibility.
/// With Q^0 = p (the simplex-renormalized input field) and unary
/// u = -log(max(p, 1e-8)), each iteration computes, per pixel i and label l,
///   Q'_i(l) ∝ exp(-u_i(l) + msg_i(l)),   msg = M Q
/// with the row-normalized kernel M described above, then renormalizes.
/// iterations = 0 (or zero pairwise weights) returns the input field.
inline ProbField dense_crf(const Tensor& image, const ProbField& field, const CrfParams& params) {
    params.validate();
    WSSEG_CHECK(image.n == 1 && image.c == 3, "dense_crf: image must be (1,3,H,W)");
    WSSEG_CHECK(field.probs.h == image.h && field.probs.w == image.w,
                "dense_crf: image and field dimensions differ");

    ProbField out = field;
    renormalize_simplex(out.probs);
    if (params.iterations == 0) return out;

    const int K = out.channels();
    const int64_t N = int64_t(image.h) * image.w;
    const int64_t plane = N;

    // unary from the (renormalized) input field
    std::vector<float> unary(size_t(N) * K);
    std::vector<float> q(size_t(N) * K);
    for (int64_t i = 0; i < N; ++i)
        for (int c = 0; c < K; ++c) {
            float p = out.probs.v[size_t(c) * plane + i];
            unary[size_t(i) * K + c] = -std::log(std::max(p, 1e-8f));
            q[size_t(i) * K + c] = p;
        }

    detail::CrfKernel kernel(image, params);
    std::vector<double> msg(size_t(N) * K);
    for (int it = 0; it < params.iterations; ++it) {
        kernel.message(q, msg, K);
        for (int64_t i = 0; i < N; ++i) {
            double best = -1e300;
            for (int c = 0; c < K; ++c)
                best = std::max(best, -double(unary[size_t(i) * K + c]) + msg[size_t(i) * K + c]);
            double sum = 0;
            for (int c = 0; c < K; ++c) {
                double e = std::exp(-double(unary[size_t(i) * K + c]) + msg[size_t(i) * K + c] - best);
                q[size_t(i) * K + c] = float(e);
                sum += e;
            }
            float inv = float(1.0 / sum);
            for (int c = 0; c < K; ++c) q[size_t(i) * K + c] *= inv;
        }
    }

    for (int64_t i = 0; i < N; ++i)
        for (int c = 0; c < K; ++c) out.probs.v[size_t(c) * plane + i] = q[size_t(i) * K + c];
    return out;
}

/// Box-downsamples a field by an integer stride and renormalizes.
inline ProbField downsample_field(const ProbField& field, int stride) {
    ProbField out = field;
    out.probs = avg_downsample(field.probs, stride);
    renormalize_simplex(out.probs);
    return out;
}

}  // namespace wsseg

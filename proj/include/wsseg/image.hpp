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

#include "wsseg/parallel.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg {

/// Mirror each row of every plane.
inline Tensor flip_horizontal(const Tensor& t) {
    Tensor out(t.n, t.c, t.h, t.w);
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.c; ++j) {
            const float* src = t.plane(i, j);
            float* dst = out.plane(i, j);
            for (int y = 0; y < t.h; ++y)
                for (int x = 0; x < t.w; ++x)
                    dst[y * t.w + x] = src[y * t.w + (t.w - 1 - x)];
        }
    return out;
}

inline LabelMask flip_horizontal(const LabelMask& m) {
    LabelMask out(m.h, m.w);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) out.at(y, x) = m.at(y, m.w - 1 - x);
    return out;
}

namespace detail {
// Half-pixel-center source coordinate; symmetric under mirroring so that
// resize commutes with horizontal flips up to float rounding.
inline void bilinear_prep(int dst, int src, int i, double scale, int& i0, int& i1, float& f) {
    double u = (i + 0.5) * scale - 0.5;
    (void)dst;
    double fl = std::floor(u);
    i0 = int(fl);
    i1 = i0 + 1;
    f = float(u - fl);
    if (i0 < 0) { i0 = 0; i1 = 0; f = 0.f; }
    if (i1 > src - 1) { i1 = src - 1; if (i0 > src - 1) i0 = src - 1; }
}
}  // namespace detail

/// Bilinear resize of every plane to (oh, ow). Same-size input is copied
/// verbatim.
inline Tensor resize_bilinear(const Tensor& t, int oh, int ow) {
    WSSEG_CHECK(t.h > 0 && t.w > 0 && oh > 0 && ow > 0, "resize_bilinear: empty input");
    if (oh == t.h && ow == t.w) return t;
    Tensor out(t.n, t.c, oh, ow);
    double sy = double(t.h) / oh;
    double sx = double(t.w) / ow;

    std::vector<int> x0(ow), x1(ow);
    std::vector<float> fx(ow);
    for (int x = 0; x < ow; ++x) detail::bilinear_prep(ow, t.w, x, sx, x0[x], x1[x], fx[x]);

    int64_t planes = int64_t(t.n) * t.c;
    parallel_for(planes, [&](int64_t b, int64_t e) {
        for (int64_t p = b; p < e; ++p) {
            const float* src = t.v.data() + p * t.h * t.w;
            float* dst = out.v.data() + p * int64_t(oh) * ow;
            for (int y = 0; y < oh; ++y) {
                int y0, y1;
                float fy;
                detail::bilinear_prep(oh, t.h, y, sy, y0, y1, fy);
                const float* r0 = src + int64_t(y0) * t.w;
                const float* r1 = src + int64_t(y1) * t.w;
                for (int x = 0; x < ow; ++x) {
                    float a = r0[x0[x]] + fx[x] * (r0[x1[x]] - r0[x0[x]]);
                    float b2 = r1[x0[x]] + fx[x] * (r1[x1[x]] - r1[x0[x]]);
                    dst[int64_t(y) * ow + x] = a + fy * (b2 - a);
                }
            }
        }
    });
    return out;
}

/// Nearest-neighbor upsample/downsample of a label field.
inline LabelMask resize_nearest(const LabelMask& m, int oh, int ow) {
    WSSEG_CHECK(m.h > 0 && m.w > 0 && oh > 0 && ow > 0, "resize_nearest: empty input");
    if (oh == m.h && ow == m.w) return m;
    LabelMask out(oh, ow);
    for (int y = 0; y < oh; ++y) {
        int sy = std::min(m.h - 1, int((y + 0.5) * m.h / oh));
        for (int x = 0; x < ow; ++x) {
            int sx = std::min(m.w - 1, int((x + 0.5) * m.w / ow));
            out.at(y, x) = m.at(sy, sx);
        }
    }
    return out;
}

/// Box-average downsample by an integer factor dividing both dims.
inline Tensor avg_downsample(const Tensor& t, int factor) {
    WSSEG_CHECK(factor >= 1, "avg_downsample: factor must be >= 1");
    WSSEG_CHECK(t.h % factor == 0 && t.w % factor == 0, "avg_downsample: dims not divisible");
    if (factor == 1) return t;
    int oh = t.h / factor, ow = t.w / factor;
    Tensor out(t.n, t.c, oh, ow);
    float inv = 1.f / float(factor * factor);
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.c; ++j) {
            const float* src = t.plane(i, j);
            float* dst = out.plane(i, j);
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x) {
                    float s = 0.f;
                    for (int dy = 0; dy < factor; ++dy)
                        for (int dx = 0; dx < factor; ++dx)
                            s += src[(y * factor + dy) * t.w + (x * factor + dx)];
                    dst[y * ow + x] = s * inv;
                }
        }
    return out;
}

namespace detail {
// reflect-101 index: ...2 1 | 0 1 2 ... n-1 | n-2 n-3...
inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}
}  // namespace detail

/// Reflect-pad every plane.
inline Tensor pad_reflect(const Tensor& t, int top, int bottom, int left, int right) {
    Tensor out(t.n, t.c, t.h + top + bottom, t.w + left + right);
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.c; ++j) {
            const float* src = t.plane(i, j);
            float* dst = out.plane(i, j);
            for (int y = 0; y < out.h; ++y) {
                int sy = detail::reflect101(y - top, t.h);
                for (int x = 0; x < out.w; ++x) {
                    int sx = detail::reflect101(x - left, t.w);
                    dst[int64_t(y) * out.w + x] = src[int64_t(sy) * t.w + sx];
                }
            }
        }
    return out;
}

inline Tensor crop(const Tensor& t, int top, int left, int oh, int ow) {
    WSSEG_CHECK(top >= 0 && left >= 0 && top + oh <= t.h && left + ow <= t.w, "crop: out of bounds");
    Tensor out(t.n, t.c, oh, ow);
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.c; ++j)
            for (int y = 0; y < oh; ++y) {
                const float* src = t.plane(i, j) + int64_t(top + y) * t.w + left;
                float* dst = out.plane(i, j) + int64_t(y) * ow;
                std::copy(src, src + ow, dst);
            }
    return out;
}

/// 2x3 affine matrix mapping destination pixel coords to source coords.
struct Affine {
    // sx = m[0]*x + m[1]*y + m[2]; sy = m[3]*x + m[4]*y + m[5]
    std::array<double, 6> m{1, 0, 0, 0, 1, 0};

    static Affine identity() { return {}; }

    Affine then(const Affine& o) const {  // apply *this first, then o: composite = o ∘ this
        Affine r;
        r.m[0] = o.m[0] * m[0] + o.m[1] * m[3];
        r.m[1] = o.m[0] * m[1] + o.m[1] * m[4];
        r.m[2] = o.m[0] * m[2] + o.m[1] * m[5] + o.m[2];
        r.m[3] = o.m[3] * m[0] + o.m[4] * m[3];
        r.m[4] = o.m[3] * m[1] + o.m[4] * m[4];
        r.m[5] = o.m[3] * m[2] + o.m[4] * m[5] + o.m[5];
        return r;
    }
};

/// Bilinear warp with reflect-101 border; dst and src share dimensions.
inline Tensor warp_affine(const Tensor& t, const Affine& dst_to_src) {
    Tensor out(t.n, t.c, t.h, t.w);
    const auto& m = dst_to_src.m;
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.c; ++j) {
            const float* src = t.plane(i, j);
            float* dst = out.plane(i, j);
            for (int y = 0; y < t.h; ++y)
                for (int x = 0; x < t.w; ++x) {
                    double sx = m[0] * x + m[1] * y + m[2];
                    double sy = m[3] * x + m[4] * y + m[5];
                    double flx = std::floor(sx), fly = std::floor(sy);
                    int x0 = int(flx), y0 = int(fly);
                    float fx = float(sx - flx), fy = float(sy - fly);
                    int xa = detail::reflect101(x0, t.w), xb = detail::reflect101(x0 + 1, t.w);
                    int ya = detail::reflect101(y0, t.h), yb = detail::reflect101(y0 + 1, t.h);
                    float v00 = src[int64_t(ya) * t.w + xa], v01 = src[int64_t(ya) * t.w + xb];
                    float v10 = src[int64_t(yb) * t.w + xa], v11 = src[int64_t(yb) * t.w + xb];
                    float top = v00 + fx * (v01 - v00);
                    float bot = v10 + fx * (v11 - v10);
                    dst[int64_t(y) * t.w + x] = top + fy * (bot - top);
                }
        }
    return out;
}

inline void clamp01(Tensor& t) {
    for (float& x : t.v) x = std::min(1.f, std::max(0.f, x));
}

}  // namespace wsseg

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

#include <algorithm>
#include <cmath>

#include "wsseg/image.hpp"
#include "wsseg/rng.hpp"

namespace wsseg {

/// Strong-augmentation knobs: horizontal flip, shift, scale, rotate, Gauss
/// noise, brightness/contrast, median blur, RGB shift. All magnitudes are
/// conventional mild defaults; the fully disabled config is the exact
/// identity.
struct AugmentationConfig {
    bool enable_flip = false;
    double flip_prob = 0.5;

    bool enable_shift = false;
    double shift_frac = 0.10;  // +/- fraction of each side

    bool enable_scale = false;
    double scale_lo = 0.9, scale_hi = 1.1;

    bool enable_rotate = false;
    double rotate_deg = 15.0;  // +/- degrees

    bool enable_noise = false;
    double noise_var = 0.01;  // variance drawn uniformly from (0, noise_var]

    bool enable_brightness_contrast = false;
    double brightness_delta = 0.10;  // +/- additive
    double contrast_delta = 0.10;    // gain drawn from 1 +/- delta

    bool enable_median_blur = false;
    std::vector<int> blur_kernels{3, 5};

    bool enable_rgb_shift = false;
    double rgb_shift = 0.05;  // +/- per channel

    static AugmentationConfig all_on() {
        AugmentationConfig c;
        c.enable_flip = c.enable_shift = c.enable_scale = c.enable_rotate = true;
        c.enable_noise = c.enable_brightness_contrast = true;
        c.enable_median_blur = c.enable_rgb_shift = true;
        return c;
    }

    bool any_enabled() const {
        return enable_flip || enable_shift || enable_scale || enable_rotate || enable_noise ||
               enable_brightness_contrast || enable_median_blur || enable_rgb_shift;
    }

    void validate() const {
        WSSEG_CHECK(flip_prob >= 0.0 && flip_prob <= 1.0, "augment: flip_prob outside [0,1]");
        WSSEG_CHECK(shift_frac >= 0.0, "augment: negative shift range");
        WSSEG_CHECK(scale_lo > 0.0 && scale_lo <= scale_hi, "augment: bad scale interval");
        WSSEG_CHECK(rotate_deg >= 0.0, "augment: negative rotation range");
        WSSEG_CHECK(noise_var >= 0.0, "augment: negative noise variance");
        WSSEG_CHECK(brightness_delta >= 0.0 && contrast_delta >= 0.0,
                    "augment: negative brightness/contrast delta");
        WSSEG_CHECK(rgb_shift >= 0.0, "augment: negative rgb shift");
        for (int k : blur_kernels)
            WSSEG_CHECK(k >= 3 && k % 2 == 1, "augment: blur kernels must be odd and >= 3");
    }
};

namespace detail {

inline Tensor median_blur(const Tensor& img, int k) {
    Tensor out(img.n, img.c, img.h, img.w);
    int r = k / 2;
    std::vector<float> window(size_t(k) * k);
    for (int i = 0; i < img.n; ++i)
        for (int j = 0; j < img.c; ++j) {
            const float* src = img.plane(i, j);
            float* dst = out.plane(i, j);
            for (int y = 0; y < img.h; ++y)
                for (int x = 0; x < img.w; ++x) {
                    size_t m = 0;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            int sy = reflect101(y + dy, img.h);
                            int sx = reflect101(x + dx, img.w);
                            window[m++] = src[int64_t(sy) * img.w + sx];
                        }
                    std::nth_element(window.begin(), window.begin() + m / 2, window.begin() + m);
                    dst[int64_t(y) * img.w + x] = window[m / 2];
                }
        }
    return out;
}

}  // namespace detail

/// Applies the configured transforms with parameters drawn from rng in a
/// fixed order (flip, shift, scale, rotate, blur, brightness/contrast, rgb
/// shift, noise); disabled components draw nothing. Output stays in [0,1]
/// and keeps the input dimensions.
inline Tensor augment(const Tensor& image, const AugmentationConfig& config, Rng& rng) {
    WSSEG_CHECK(!image.empty(), "augment: empty image");
    config.validate();
    if (!config.any_enabled()) return image;

    bool flip = config.enable_flip && rng.bernoulli(config.flip_prob);
    double dx = 0, dy = 0, scale = 1.0, theta = 0.0;
    if (config.enable_shift) {
        dx = rng.uniform(-config.shift_frac, config.shift_frac) * image.w;
        dy = rng.uniform(-config.shift_frac, config.shift_frac) * image.h;
    }
    if (config.enable_scale) scale = rng.uniform(config.scale_lo, config.scale_hi);
    if (config.enable_rotate)
        theta = rng.uniform(-config.rotate_deg, config.rotate_deg) * M_PI / 180.0;

    Tensor out = image;
    bool geometric = config.enable_shift || config.enable_scale || config.enable_rotate;
    if (geometric) {
        // dst -> src about the image center: inverse of scale*rotate then shift
        double cx = (image.w - 1) * 0.5, cy = (image.h - 1) * 0.5;
        double cosv = std::cos(theta), sinv = std::sin(theta);
        double inv = 1.0 / scale;
        Affine a;
        a.m[0] = cosv * inv;
        a.m[1] = sinv * inv;
        a.m[3] = -sinv * inv;
        a.m[4] = cosv * inv;
        a.m[2] = cx - a.m[0] * (cx + dx) - a.m[1] * (cy + dy);
        a.m[5] = cy - a.m[3] * (cx + dx) - a.m[4] * (cy + dy);
        out = warp_affine(out, a);
    }
    if (flip) out = flip_horizontal(out);

    if (config.enable_median_blur && !config.blur_kernels.empty()) {
        int k = config.blur_kernels[size_t(rng.uniform_int(0, int(config.blur_kernels.size()) - 1))];
        out = detail::median_blur(out, k);
    }
    if (config.enable_brightness_contrast) {
        float gain = float(rng.uniform(1.0 - config.contrast_delta, 1.0 + config.contrast_delta));
        float bias = float(rng.uniform(-config.brightness_delta, config.brightness_delta));
        for (float& v : out.v) v = (v - 0.5f) * gain + 0.5f + bias;
    }
    if (config.enable_rgb_shift) {
        for (int ch = 0; ch < out.c; ++ch) {
            float shift = float(rng.uniform(-config.rgb_shift, config.rgb_shift));
            float* p = out.plane(0, ch);
            for (int64_t i = 0; i < out.plane_size(); ++i) p[i] += shift;
        }
    }
    if (config.enable_noise) {
        double var = rng.uniform(0.0, config.noise_var);
        float sigma = float(std::sqrt(var));
        for (float& v : out.v) v += sigma * float(rng.normal());
    }
    clamp01(out);
    return out;
}

}  // namespace wsseg

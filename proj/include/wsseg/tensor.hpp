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
#include <array>
#include <cstdint>
#include <vector>

#include "wsseg/error.hpp"

namespace wsseg {

/// Dense little float tensor in NCHW order. Images are (1,3,H,W), per-class
/// map stacks (1,K,H,W), single planes (1,1,H,W).
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, float fill = 0.f)
        : n(n_), c(c_), h(h_), w(w_), v(size_t(int64_t(n_) * c_ * h_ * w_), fill) {}

    static Tensor hw(int h, int w, float fill = 0.f) { return Tensor(1, 1, h, w, fill); }
    static Tensor chw(int c, int h, int w, float fill = 0.f) { return Tensor(1, c, h, w, fill); }

    int64_t size() const { return int64_t(n) * c * h * w; }
    bool empty() const { return size() == 0; }
    int64_t plane_size() const { return int64_t(h) * w; }

    float& at(int i, int j, int y, int x) {
        return v[size_t(((int64_t(i) * c + j) * h + y) * w + x)];
    }
    float at(int i, int j, int y, int x) const {
        return v[size_t(((int64_t(i) * c + j) * h + y) * w + x)];
    }

    float* plane(int i, int j) { return v.data() + (int64_t(i) * c + j) * h * w; }
    const float* plane(int i, int j) const { return v.data() + (int64_t(i) * c + j) * h * w; }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    void fill(float x) { std::fill(v.begin(), v.end(), x); }

    float max_value() const {
        float m = v.empty() ? 0.f : v[0];
        for (float x : v) m = std::max(m, x);
        return m;
    }
};

/// H×W integer label field; values in {0..C} plus the ignore value 255.
struct LabelMask {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    LabelMask() = default;
    LabelMask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[size_t(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[size_t(y) * w + x]; }
    int64_t size() const { return int64_t(h) * w; }
};

}  // namespace wsseg

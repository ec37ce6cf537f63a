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

#include <string>
#include <vector>

#include "wsseg/image.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg {

/// Per-class confidence scores; scores[c-1] is the sigmoid output for class c.
struct LabelScores {
    std::vector<float> scores;

    float for_class(int class_id) const { return scores[size_t(class_id - 1)]; }
};

/// One [0,1]-valued activation map per reported class, spatially aligned to
/// the input image. Each map is max-normalized: max == 1 unless all-zero.
struct CamStack {
    std::string image_id;
    std::vector<int> class_ids;  // sorted ascending
    Tensor maps;                 // (1, K, h, w); empty tensor when K == 0
    int h = 0, w = 0;
    std::vector<double> source_scales;

    int count() const { return int(class_ids.size()); }
};

}  // namespace wsseg

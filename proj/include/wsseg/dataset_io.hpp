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

#include "wsseg/image_io.hpp"
#include "wsseg/manifest.hpp"

namespace wsseg {

inline Tensor load_record_image(const ImageRecord& record) {
    return read_ppm(record.image_uri);
}

inline LabelMask load_record_mask(const ImageRecord& record) {
    if (record.mask_uri.empty())
        throw Error("record '" + record.image_id + "' has no ground-truth mask");
    return read_pgm(record.mask_uri);
}

}  // namespace wsseg

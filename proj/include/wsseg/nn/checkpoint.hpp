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

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsseg/error.hpp"
#include "wsseg/nn/layers.hpp"

namespace wsseg::nn {

// WSSC checkpoint container, version 1:
//   magic 'WSSC' | u32 version | u64 header_len | header json (utf-8)
//   raw f32 tensor payloads in header order
// The header carries the model kind, a config echo, the class-name list and
// the ordered tensor shapes, so a checkpoint fully describes how to rebuild
// its model.

struct Checkpoint {
    std::string kind;                      // "cam_classifier" | "irnet" | "segmentation"
    nlohmann::json config;                 // config echo
    std::vector<std::string> class_names;  // dataset class list at train time
    std::vector<Tensor> tensors;           // parameter values in collect order
};

inline Checkpoint snapshot_params(const std::string& kind, const nlohmann::json& config,
                                  const std::vector<std::string>& class_names,
                                  const std::vector<Param*>& params) {
    Checkpoint ck;
    ck.kind = kind;
    ck.config = config;
    ck.class_names = class_names;
    for (const Param* p : params) ck.tensors.push_back(p->value);
    return ck;
}

inline void restore_params(const Checkpoint& ck, const std::vector<Param*>& params) {
    WSSEG_CHECK(ck.tensors.size() == params.size(), "checkpoint: parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        WSSEG_CHECK(params[i]->value.same_shape(ck.tensors[i]), "checkpoint: tensor shape mismatch");
        params[i]->value = ck.tensors[i];
    }
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    nlohmann::json header;
    header["kind"] = ck.kind;
    header["config"] = ck.config;
    header["class_names"] = ck.class_names;
    nlohmann::json shapes = nlohmann::json::array();
    for (const Tensor& t : ck.tensors) shapes.push_back({t.n, t.c, t.h, t.w});
    header["tensor_shapes"] = shapes;
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write("WSSC", 4);
    uint32_t version = 1;
    uint64_t hlen = hs.size();
    char buf[12];
    for (int i = 0; i < 4; ++i) buf[i] = char((version >> (8 * i)) & 0xff);
    for (int i = 0; i < 8; ++i) buf[4 + i] = char((hlen >> (8 * i)) & 0xff);
    out.write(buf, 12);
    out.write(hs.data(), std::streamsize(hs.size()));
    for (const Tensor& t : ck.tensors)
        out.write(reinterpret_cast<const char*>(t.v.data()), std::streamsize(t.v.size() * 4));
    if (!out) throw IoError("short write: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "WSSC", 4) != 0)
        throw FormatError("not a checkpoint file: " + path);
    unsigned char buf[12];
    in.read(reinterpret_cast<char*>(buf), 12);
    if (!in) throw FormatError("truncated checkpoint: " + path);
    uint32_t version = 0;
    uint64_t hlen = 0;
    for (int i = 3; i >= 0; --i) version = (version << 8) | buf[i];
    for (int i = 7; i >= 0; --i) hlen = (hlen << 8) | buf[4 + i];
    if (version != 1) throw FormatError("unsupported checkpoint version: " + path);
    std::string hs(hlen, '\0');
    in.read(hs.data(), std::streamsize(hlen));
    if (!in) throw FormatError("truncated checkpoint: " + path);
    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) throw FormatError("bad checkpoint header: " + path);

    Checkpoint ck;
    ck.kind = header.at("kind").get<std::string>();
    ck.config = header.at("config");
    ck.class_names = header.at("class_names").get<std::vector<std::string>>();
    for (const auto& s : header.at("tensor_shapes")) {
        Tensor t(s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>(), s.at(3).get<int>());
        in.read(reinterpret_cast<char*>(t.v.data()), std::streamsize(t.v.size() * 4));
        if (!in) throw FormatError("truncated checkpoint payload: " + path);
        ck.tensors.push_back(std::move(t));
    }
    return ck;
}

}  // namespace wsseg::nn

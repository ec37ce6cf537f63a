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

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "wsseg/error.hpp"
#include "wsseg/rng.hpp"
#include "wsseg/version.hpp"

namespace wsseg {

/// Canonical hash of a config object: nlohmann::json keeps object keys
/// sorted, so dump() is invariant under key reordering.
inline std::string config_hash(const nlohmann::json& config) {
    std::string canon = config.dump();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)fnv1a64(canon));
    return buf;
}

inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, size_t(in.gcount()), h);
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", (unsigned long long)h);
    return out;
}

/// Provenance record written next to every step's artifacts: enough to trace
/// any pseudo-mask back to the checkpoint, config and seed that produced it.
struct RunMetadata {
    std::string step;
    std::string config_hash;
    uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes;  // artifact path -> hash
    std::string tool_version = kVersion;
    std::string timestamp;  // informational only

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["step"] = step;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        j["input_hashes"] = input_hashes;
        j["tool_version"] = tool_version;
        j["timestamp"] = timestamp;
        return j;
    }

    static RunMetadata from_json(const nlohmann::json& j) {
        RunMetadata m;
        m.step = j.at("step").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seed = j.at("seed").get<uint64_t>();
        m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.timestamp = j.value("timestamp", "");
        return m;
    }
};

inline std::string now_timestamp() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_run_metadata(const RunMetadata& meta, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write run metadata: " + path);
    out << meta.to_json().dump(2) << "\n";
    if (!out) throw IoError("short write: " + path);
}

inline RunMetadata read_run_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read run metadata: " + path);
    nlohmann::json j;
    in >> j;
    return RunMetadata::from_json(j);
}

}  // namespace wsseg

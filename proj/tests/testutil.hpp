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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "wsseg/rng.hpp"
#include "wsseg/tensor.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("wsseg_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline double max_abs_diff(const wsseg::Tensor& a, const wsseg::Tensor& b) {
    if (!a.same_shape(b)) return 1e30;
    double m = 0;
    for (int64_t i = 0; i < a.size(); ++i)
        m = std::max(m, double(std::abs(a.v[size_t(i)] - b.v[size_t(i)])));
    return m;
}

inline wsseg::Tensor random_tensor(int n, int c, int h, int w, wsseg::Rng& rng, double lo = 0.0,
                                   double hi = 1.0) {
    wsseg::Tensor t(n, c, h, w);
    for (auto& v : t.v) v = float(rng.uniform(lo, hi));
    return t;
}

}  // namespace testutil

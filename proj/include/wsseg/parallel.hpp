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
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace wsseg {

/// Worker count: WSSEG_THREADS env override, else hardware concurrency.
inline int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("WSSEG_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : int(hw);
    }();
    return n;
}

/// Runs fn(begin, end) over a static partition of [0, n). Each index is
/// handled by exactly one thread, so results are identical for any worker
/// count as long as fn writes disjoint outputs per index.
template <typename Fn>
inline void parallel_for(int64_t n, Fn&& fn) {
    if (n <= 0) return;
    int workers = std::min<int64_t>(thread_count(), n);
    if (workers <= 1) {
        fn(int64_t(0), n);
        return;
    }
    int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers - 1));
    for (int t = 1; t < workers; ++t) {
        int64_t b = t * chunk;
        int64_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(int64_t(0), std::min(n, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace wsseg

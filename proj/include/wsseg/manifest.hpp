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
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wsseg/error.hpp"
#include "wsseg/rng.hpp"

namespace wsseg {

/// One dataset entry: image-level labels only; mask_uri is evaluation-only
/// ground truth and may be empty.
struct ImageRecord {
    std::string image_id;
    std::string image_uri;
    std::set<int> labels;  // class ids in {1..C}
    std::string mask_uri;  // optional
};

struct DatasetManifest {
    std::vector<ImageRecord> records;
    std::vector<std::string> class_names;  // length C; index i names class id i+1
    std::set<int> excluded_classes;

    int num_classes() const { return int(class_names.size()); }

    /// Count of records carrying each class id (index 1..C; index 0 unused).
    std::vector<int> class_frequencies() const {
        std::vector<int> freq(size_t(num_classes()) + 1, 0);
        for (const auto& r : records)
            for (int l : r.labels) freq[size_t(l)]++;
        return freq;
    }
};

// ---------------------------------------------------------------------------
// Manifest file format: UTF-8, LF line endings.
//   header:  classes: name1,name2,...
//   record:  image_id<TAB>image_path<TAB>label_id[,label_id...]<TAB>[mask_path]
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace detail

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);

    DatasetManifest m;
    std::string line;
    int line_no = 0;
    std::unordered_set<std::string> seen_ids;

    auto fail = [&](const std::string& what) -> void {
        throw FormatError(path + ":" + std::to_string(line_no) + ": " + what);
    };

    if (!std::getline(in, line)) throw FormatError(path + ": empty file, missing header");
    line_no = 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string prefix = "classes: ";
    if (line.rfind("classes:", 0) != 0) fail("expected 'classes:' header");
    std::string names = line.substr(line.find(':') + 1);
    while (!names.empty() && names.front() == ' ') names.erase(names.begin());
    if (!names.empty()) {
        for (auto& n : detail::split(names, ',')) {
            if (n.empty()) fail("empty class name");
            m.class_names.push_back(n);
        }
    }
    int C = m.num_classes();

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split(line, '\t');
        if (fields.size() < 3 || fields.size() > 4) fail("expected 3 or 4 tab-separated fields");
        ImageRecord r;
        r.image_id = fields[0];
        r.image_uri = fields[1];
        if (r.image_id.empty()) fail("empty image_id");
        if (!seen_ids.insert(r.image_id).second) fail("duplicate image_id '" + r.image_id + "'");
        for (const auto& tok : detail::split(fields[2], ',')) {
            if (tok.empty()) fail("empty label id");
            int id = 0;
            try {
                size_t pos = 0;
                id = std::stoi(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                fail("bad label id '" + tok + "'");
            }
            if (id < 1 || id > C)
                fail("record '" + r.image_id + "': label id " + std::to_string(id) +
                     " out of range 1.." + std::to_string(C));
            r.labels.insert(id);
        }
        if (r.labels.empty()) fail("record '" + r.image_id + "' has no labels");
        if (fields.size() == 4) r.mask_uri = fields[3];
        m.records.push_back(std::move(r));
    }
    return m;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: force LF on every platform
    if (!out) throw IoError("cannot write manifest: " + path);
    out << "classes: ";
    for (size_t i = 0; i < m.class_names.size(); ++i) {
        if (i) out << ",";
        out << m.class_names[i];
    }
    out << "\n";
    for (const auto& r : m.records) {
        out << r.image_id << "\t" << r.image_uri << "\t";
        bool first = true;
        for (int l : r.labels) {
            if (!first) out << ",";
            out << l;
            first = false;
        }
        if (!r.mask_uri.empty()) out << "\t" << r.mask_uri;
        out << "\n";
    }
    if (!out) throw IoError("short write: " + path);
}

// ---------------------------------------------------------------------------
// Dataset operations
// ---------------------------------------------------------------------------

/// Removes class_id from every record; records left with no labels are
/// dropped. Idempotent.
inline DatasetManifest exclude_class(const DatasetManifest& manifest, int class_id) {
    if (class_id < 1 || class_id > manifest.num_classes())
        throw ConfigError("exclude_class: class id " + std::to_string(class_id) +
                          " out of range 1.." + std::to_string(manifest.num_classes()));
    DatasetManifest out;
    out.class_names = manifest.class_names;
    out.excluded_classes = manifest.excluded_classes;
    out.excluded_classes.insert(class_id);
    for (const auto& r : manifest.records) {
        ImageRecord nr = r;
        nr.labels.erase(class_id);
        if (!nr.labels.empty()) out.records.push_back(std::move(nr));
    }
    return out;
}

/// Class-balancing by downsampling. Greedy procedure:
///   1. order classes by descending initial frequency (ties: ascending id);
///   2. for each class c still above cap, shuffle its records with the seeded
///      RNG and walk that order, dropping a record only if every label it
///      carries currently has count > cap (so no class is pushed below the
///      cap and no last exemplar is ever dropped), until count(c) <= cap or
///      candidates run out.
/// Output keeps the original record order of the survivors.
inline DatasetManifest balance_downsample(const DatasetManifest& manifest, int cap_per_class,
                                          uint64_t seed) {
    WSSEG_CHECK(cap_per_class >= 1, "balance_downsample: cap_per_class must be >= 1");
    int C = manifest.num_classes();
    std::vector<int> count = manifest.class_frequencies();
    std::vector<char> dropped(manifest.records.size(), 0);

    std::vector<int> order;  // class ids, descending initial frequency
    for (int cid = 1; cid <= C; ++cid)
        if (count[size_t(cid)] > 0) order.push_back(cid);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return count[size_t(a)] > count[size_t(b)];
    });

    Rng rng(seed);
    for (int cid : order) {
        if (count[size_t(cid)] <= cap_per_class) continue;
        std::vector<size_t> candidates;
        for (size_t i = 0; i < manifest.records.size(); ++i)
            if (!dropped[i] && manifest.records[i].labels.count(cid)) candidates.push_back(i);
        rng.shuffle(candidates);
        for (size_t i : candidates) {
            if (count[size_t(cid)] <= cap_per_class) break;
            bool droppable = true;
            for (int l : manifest.records[i].labels)
                if (count[size_t(l)] <= cap_per_class) {
                    droppable = false;
                    break;
                }
            if (!droppable) continue;
            dropped[i] = 1;
            for (int l : manifest.records[i].labels) count[size_t(l)]--;
        }
    }

    DatasetManifest out;
    out.class_names = manifest.class_names;
    out.excluded_classes = manifest.excluded_classes;
    for (size_t i = 0; i < manifest.records.size(); ++i)
        if (!dropped[i]) out.records.push_back(manifest.records[i]);
    return out;
}

/// Seeded stratified split on the rarest label of each record. Groups with
/// at least two records contribute at least one record to each side.
inline std::pair<DatasetManifest, DatasetManifest> split_train_val(const DatasetManifest& manifest,
                                                                   double val_fraction,
                                                                   uint64_t seed) {
    WSSEG_CHECK(val_fraction > 0.0 && val_fraction < 1.0,
                "split_train_val: val_fraction must be in (0,1)");
    if (manifest.records.size() < 2)
        throw ConfigError("split_train_val: need at least 2 records");

    std::vector<int> freq = manifest.class_frequencies();
    // strat key: the record's globally rarest label (ties -> smaller id)
    std::map<int, std::vector<size_t>> groups;
    for (size_t i = 0; i < manifest.records.size(); ++i) {
        int best = -1;
        for (int l : manifest.records[i].labels)
            if (best == -1 || freq[size_t(l)] < freq[size_t(best)]) best = l;
        groups[best].push_back(i);
    }

    Rng rng(seed);
    std::vector<char> to_val(manifest.records.size(), 0);
    for (auto& [key, idxs] : groups) {
        (void)key;
        rng.shuffle(idxs);
        size_t n = idxs.size();
        auto n_val = size_t(std::llround(val_fraction * double(n)));
        if (n >= 2) n_val = std::min(std::max<size_t>(n_val, 1), n - 1);
        else n_val = 0;  // singleton groups stay in train
        for (size_t k = 0; k < n_val; ++k) to_val[idxs[k]] = 1;
    }

    DatasetManifest train, val;
    train.class_names = val.class_names = manifest.class_names;
    train.excluded_classes = val.excluded_classes = manifest.excluded_classes;
    for (size_t i = 0; i < manifest.records.size(); ++i)
        (to_val[i] ? val : train).records.push_back(manifest.records[i]);
    return {train, val};
}

}  // namespace wsseg

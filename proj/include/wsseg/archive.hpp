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
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wsseg/error.hpp"

namespace wsseg {

// WSSA array archive, version 1. Byte layout (all integers little-endian):
//   magic 'WSSA' | u32 version | u64 record count
//   index entries, one per record:
//     u32 id_len | id bytes | u32 dtype (0 = f32) | u32 rank | u32 dims[rank]
//     u32 n_class_ids | u32 class_ids[n] | u64 payload_offset (from file start)
//   payloads, concatenated raw f32
// Archives are immutable once written; the index allows reading any record
// without scanning the payloads.

struct ArrayRecord {
    std::string image_id;
    std::vector<int> class_ids;
    std::vector<uint32_t> shape;  // rank 2 or 3
    std::vector<float> data;

    uint64_t element_count() const {
        uint64_t n = 1;
        for (uint32_t d : shape) n *= d;
        return n;
    }
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
    explicit ByteReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

    uint32_t u32() {
        unsigned char b[4];
        read(b, 4);
        return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
    }
    uint64_t u64() {
        unsigned char b[8];
        read(b, 8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::string bytes(size_t n) {
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }
    void read(void* dst, size_t n) {
        in_.read(static_cast<char*>(dst), std::streamsize(n));
        if (!in_) throw FormatError("truncated archive: " + path_);
    }

private:
    std::istream& in_;
    std::string path_;
};

}  // namespace detail

inline void write_archive(const std::vector<ArrayRecord>& records, const std::string& path) {
    std::unordered_set<std::string> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.image_id).second)
            throw Error("write_archive: duplicate id '" + r.image_id + "'");
        WSSEG_CHECK(r.shape.size() == 2 || r.shape.size() == 3,
                    "write_archive: shape rank must be 2 or 3");
        WSSEG_CHECK(r.data.size() == r.element_count(),
                    "write_archive: payload length != product(shape)");
    }

    // two passes: the first (with placeholder offsets) measures the index
    // size, which the real offsets depend on
    std::string index;
    uint64_t index_size = 0;
    for (int pass = 0; pass < 2; ++pass) {
        index.clear();
        detail::put_u32(index, 1);  // version
        detail::put_u64(index, records.size());
        uint64_t offset = pass == 0 ? 0 : 4 + index_size;
        for (const auto& r : records) {
            detail::put_u32(index, uint32_t(r.image_id.size()));
            index.append(r.image_id);
            detail::put_u32(index, 0);  // dtype f32
            detail::put_u32(index, uint32_t(r.shape.size()));
            for (uint32_t d : r.shape) detail::put_u32(index, d);
            detail::put_u32(index, uint32_t(r.class_ids.size()));
            for (int c : r.class_ids) detail::put_u32(index, uint32_t(c));
            detail::put_u64(index, offset);
            offset += r.data.size() * 4;
        }
        if (pass == 0) index_size = index.size();
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write archive: " + path);
    out.write("WSSA", 4);
    out.write(index.data(), std::streamsize(index.size()));
    for (const auto& r : records) {
        static_assert(sizeof(float) == 4);
        out.write(reinterpret_cast<const char*>(r.data.data()), std::streamsize(r.data.size() * 4));
    }
    if (!out) throw IoError("short write: " + path);
}

/// Seekable reader; parses the index up front, loads payloads on demand.
class ArchiveReader {
public:
    explicit ArchiveReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open archive: " + path);
        detail::ByteReader r(in_, path_);
        char magic[4];
        r.read(magic, 4);
        if (std::memcmp(magic, "WSSA", 4) != 0) throw FormatError("bad magic: " + path);
        uint32_t version = r.u32();
        if (version != 1)
            throw FormatError("unsupported archive version " + std::to_string(version) + ": " + path);
        uint64_t count = r.u64();
        entries_.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            Entry e;
            uint32_t id_len = r.u32();
            e.image_id = r.bytes(id_len);
            uint32_t dtype = r.u32();
            if (dtype != 0) throw FormatError("unsupported dtype code: " + path);
            uint32_t rank = r.u32();
            if (rank != 2 && rank != 3) throw FormatError("bad shape rank: " + path);
            for (uint32_t d = 0; d < rank; ++d) e.shape.push_back(r.u32());
            uint32_t nc = r.u32();
            for (uint32_t c = 0; c < nc; ++c) e.class_ids.push_back(int(r.u32()));
            e.offset = r.u64();
            if (!by_id_.emplace(e.image_id, entries_.size()).second)
                throw FormatError("duplicate id in archive: " + path);
            entries_.push_back(std::move(e));
        }
        in_.seekg(0, std::ios::end);
        file_size_ = uint64_t(in_.tellg());
    }

    size_t count() const { return entries_.size(); }
    const std::string& id_at(size_t k) const { return entries_[k].image_id; }
    bool contains(const std::string& id) const { return by_id_.count(id) > 0; }

    ArrayRecord read_at(size_t k) {
        WSSEG_CHECK(k < entries_.size(), "archive: index out of range");
        const Entry& e = entries_[k];
        ArrayRecord rec;
        rec.image_id = e.image_id;
        rec.class_ids = e.class_ids;
        rec.shape = e.shape;
        uint64_t n = rec.element_count();
        if (e.offset + n * 4 > file_size_) throw FormatError("truncated archive: " + path_);
        rec.data.resize(n);
        in_.seekg(std::streamoff(e.offset));
        in_.read(reinterpret_cast<char*>(rec.data.data()), std::streamsize(n * 4));
        if (!in_) throw FormatError("truncated archive: " + path_);
        return rec;
    }

    ArrayRecord read(const std::string& id) {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) throw Error("archive: no record '" + id + "' in " + path_);
        return read_at(it->second);
    }

    std::vector<ArrayRecord> read_all() {
        std::vector<ArrayRecord> out;
        out.reserve(entries_.size());
        for (size_t k = 0; k < entries_.size(); ++k) out.push_back(read_at(k));
        return out;
    }

private:
    struct Entry {
        std::string image_id;
        std::vector<int> class_ids;
        std::vector<uint32_t> shape;
        uint64_t offset = 0;
    };
    std::string path_;
    std::ifstream in_;
    uint64_t file_size_ = 0;
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> by_id_;
};

}  // namespace wsseg

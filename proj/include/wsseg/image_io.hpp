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

#include <cstdio>
#include <fstream>
#include <string>

#include "wsseg/tensor.hpp"

namespace wsseg {

// Images are stored as binary netpbm: P6 (RGB) for inputs, P5 (8-bit single
// channel) for label masks. Uncompressed, so reruns are byte-identical and
// mask values map 1:1 to class ids (255 = ignore).

namespace detail {

inline int pnm_token(std::istream& in) {
    // skips whitespace and '#' comments, returns next non-negative integer
    while (true) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return in ? value : -1;
}

}  // namespace detail

inline void write_ppm(const std::string& path, const Tensor& img) {
    WSSEG_CHECK(img.n == 1 && img.c == 3, "write_ppm: expected (1,3,H,W) tensor");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> row(size_t(img.w) * 3);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                float v = img.at(0, ch, y, x);
                v = std::min(1.f, std::max(0.f, v));
                row[size_t(x) * 3 + ch] = (unsigned char)(v * 255.f + 0.5f);
            }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) throw IoError("short write: " + path);
}

inline Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read image: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw FormatError("not a P6 ppm: " + path);
    int w = detail::pnm_token(in);
    int h = detail::pnm_token(in);
    int maxval = detail::pnm_token(in);
    if (w <= 0 || h <= 0 || maxval != 255) throw FormatError("bad ppm header: " + path);
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> buf(size_t(w) * h * 3);
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (!in) throw FormatError("truncated ppm: " + path);
    Tensor img(1, 3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img.at(0, ch, y, x) = float(buf[(size_t(y) * w + x) * 3 + ch]) / 255.f;
    return img;
}

inline void write_pgm(const std::string& path, const LabelMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write mask: " + path);
    out << "P5\n" << mask.w << " " << mask.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.v.data()), std::streamsize(mask.v.size()));
    if (!out) throw IoError("short write: " + path);
}

inline LabelMask read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read mask: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw FormatError("not a P5 pgm: " + path);
    int w = detail::pnm_token(in);
    int h = detail::pnm_token(in);
    int maxval = detail::pnm_token(in);
    if (w <= 0 || h <= 0 || maxval != 255) throw FormatError("bad pgm header: " + path);
    in.get();
    LabelMask mask(h, w);
    in.read(reinterpret_cast<char*>(mask.v.data()), std::streamsize(mask.v.size()));
    if (!in) throw FormatError("truncated pgm: " + path);
    return mask;
}

}  // namespace wsseg

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

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "wsseg/image.hpp"
#include "wsseg/image_io.hpp"
#include "wsseg/manifest.hpp"

namespace wsseg {

// Desk-scale benchmark data: 1-3 non-overlapping colored shapes on a textured
// background, one shape type per class, with exact ground-truth masks.

struct SyntheticConfig {
    int n_images = 200;
    int n_classes = 4;
    int image_size = 64;
    uint64_t seed = 7;

    void validate() const {
        if (n_classes < 1 || n_classes > 8)
            throw ConfigError("synthetic: n_classes must be in 1..8");
        if (n_images < 1) throw ConfigError("synthetic: n_images must be >= 1");
        if (image_size < 32) throw ConfigError("synthetic: image_size must be >= 32");
    }
};

enum class ShapeType { Circle = 0, Square, Triangle, Diamond, Ring, Cross, Hexagon, Bar };

inline const char* shape_name(ShapeType t) {
    static const char* names[] = {"circle", "square",   "triangle", "diamond",
                                  "ring",   "cross",    "hexagon",  "bar"};
    return names[int(t)];
}

inline ShapeType shape_type_for_class(int class_id) {
    return ShapeType((class_id - 1) % 8);
}

struct ShapeSpec {
    int class_id = 0;
    ShapeType type = ShapeType::Circle;
    double cx = 0, cy = 0;  // center, pixel coordinates
    double size = 0;        // circumradius in pixels
    std::array<float, 3> color{0, 0, 0};
};

struct SceneSpec {
    int image_size = 0;
    uint64_t texture_seed = 0;
    std::array<float, 3> bg_base{0.5f, 0.5f, 0.5f};
    std::vector<ShapeSpec> shapes;
};

/// Analytic containment test; (px, py) are pixel-center coordinates.
inline bool shape_contains(const ShapeSpec& s, double px, double py) {
    double dx = px - s.cx, dy = py - s.cy;
    double r = s.size;
    switch (s.type) {
        case ShapeType::Circle:
            return dx * dx + dy * dy <= r * r;
        case ShapeType::Square:
            return std::max(std::abs(dx), std::abs(dy)) <= 0.85 * r;
        case ShapeType::Triangle: {
            // up-pointing, vertices (0,-r), (+-0.87r, 0.5r)
            if (dy < -r || dy > 0.5 * r) return false;
            double half_width = 0.87 * r * (dy + r) / (1.5 * r);
            return std::abs(dx) <= half_width;
        }
        case ShapeType::Diamond:
            return std::abs(dx) + std::abs(dy) <= r;
        case ShapeType::Ring: {
            double d2 = dx * dx + dy * dy;
            return d2 >= 0.55 * 0.55 * r * r && d2 <= r * r;
        }
        case ShapeType::Cross:
            return (std::abs(dx) <= 0.35 * r && std::abs(dy) <= r) ||
                   (std::abs(dy) <= 0.35 * r && std::abs(dx) <= r);
        case ShapeType::Hexagon: {
            double h = 0.8660254037844386 * r;  // sqrt(3)/2
            return std::abs(dy) <= h && std::abs(0.8660254037844386 * dx + 0.5 * dy) <= h &&
                   std::abs(0.8660254037844386 * dx - 0.5 * dy) <= h;
        }
        case ShapeType::Bar:
            return std::abs(dx) <= r && std::abs(dy) <= 0.45 * r;
    }
    return false;
}

inline std::array<float, 3> class_base_color(int class_id) {
    static const std::array<float, 3> palette[8] = {
        {0.85f, 0.15f, 0.15f}, {0.15f, 0.75f, 0.20f}, {0.15f, 0.30f, 0.85f},
        {0.90f, 0.85f, 0.10f}, {0.80f, 0.15f, 0.80f}, {0.10f, 0.80f, 0.80f},
        {0.95f, 0.55f, 0.10f}, {0.50f, 0.20f, 0.70f}};
    return palette[(class_id - 1) % 8];
}

/// Draws shape count, classes, sizes and non-overlapping placements for image
/// `index`. The first shape's class cycles through 1..n_classes with the
/// image index, so class k appears in at least floor(n_images / n_classes)
/// images.
inline SceneSpec sample_scene(int index, const SyntheticConfig& cfg, Rng& rng) {
    SceneSpec scene;
    scene.image_size = cfg.image_size;
    scene.texture_seed = rng.next_u64();
    float base = float(rng.uniform(0.35, 0.60));
    scene.bg_base = {base, base + float(rng.uniform(-0.04, 0.04)),
                     base + float(rng.uniform(-0.04, 0.04))};

    int n_shapes = 1 + rng.uniform_int(0, 2);
    double S = cfg.image_size;
    for (int k = 0; k < n_shapes; ++k) {
        ShapeSpec sh;
        sh.class_id = (k == 0) ? 1 + (index % cfg.n_classes) : rng.uniform_int(1, cfg.n_classes);
        sh.type = shape_type_for_class(sh.class_id);
        sh.size = rng.uniform(0.14, 0.22) * S;
        auto col = class_base_color(sh.class_id);
        for (int ch = 0; ch < 3; ++ch) {
            col[size_t(ch)] += float(rng.uniform(-0.05, 0.05));
            col[size_t(ch)] = std::min(1.f, std::max(0.f, col[size_t(ch)]));
        }
        sh.color = col;

        bool placed = false;
        for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
            double margin = sh.size + 2.0;
            sh.cx = rng.uniform(margin, S - margin);
            sh.cy = rng.uniform(margin, S - margin);
            placed = true;
            for (const auto& other : scene.shapes) {
                double ddx = sh.cx - other.cx, ddy = sh.cy - other.cy;
                double min_dist = (sh.size + other.size) * 1.15 + 2.0;
                if (ddx * ddx + ddy * ddy < min_dist * min_dist) {
                    placed = false;
                    break;
                }
            }
        }
        if (placed) scene.shapes.push_back(sh);
    }
    return scene;
}

/// Textured background plus flat-colored shapes; deterministic in SceneSpec.
inline Tensor render_scene_image(const SceneSpec& scene) {
    int S = scene.image_size;
    Tensor img(1, 3, S, S);
    uint64_t tex = scene.texture_seed;
    Rng noise(tex);
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            float n = float(noise.uniform(-0.08, 0.08));
            float grad = 0.06f * (float(x) / float(S) - 0.5f) + 0.04f * (float(y) / float(S) - 0.5f);
            for (int ch = 0; ch < 3; ++ch)
                img.at(0, ch, y, x) = scene.bg_base[size_t(ch)] + n + grad;
        }
    for (const auto& sh : scene.shapes)
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x)
                if (shape_contains(sh, x + 0.5, y + 0.5))
                    for (int ch = 0; ch < 3; ++ch) img.at(0, ch, y, x) = sh.color[size_t(ch)];
    clamp01(img);
    return img;
}

inline LabelMask render_scene_mask(const SceneSpec& scene) {
    int S = scene.image_size;
    LabelMask mask(S, S, 0);
    for (const auto& sh : scene.shapes)
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x)
                if (shape_contains(sh, x + 0.5, y + 0.5)) mask.at(y, x) = uint8_t(sh.class_id);
    return mask;
}

/// Writes images to <out_dir>/images and masks to <out_dir>/masks, returns
/// the manifest. Record labels are derived from the rendered mask, never
/// from the sampled scene.
inline DatasetManifest generate_synthetic_shapes(const SyntheticConfig& cfg,
                                                 const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    fs::create_directories(fs::path(out_dir) / "masks", ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);

    DatasetManifest manifest;
    for (int c = 1; c <= cfg.n_classes; ++c)
        manifest.class_names.push_back(shape_name(shape_type_for_class(c)));

    Rng root(cfg.seed);
    for (int i = 0; i < cfg.n_images; ++i) {
        Rng rng = root.fork(uint64_t(i));
        SceneSpec scene = sample_scene(i, cfg, rng);
        Tensor img = render_scene_image(scene);
        LabelMask mask = render_scene_mask(scene);

        char name[32];
        std::snprintf(name, sizeof(name), "synth_%06d", i);
        std::string image_path = (fs::path(out_dir) / "images" / (std::string(name) + ".ppm")).string();
        std::string mask_path = (fs::path(out_dir) / "masks" / (std::string(name) + ".pgm")).string();
        write_ppm(image_path, img);
        write_pgm(mask_path, mask);

        ImageRecord rec;
        rec.image_id = name;
        rec.image_uri = image_path;
        rec.mask_uri = mask_path;
        for (uint8_t v : mask.v)
            if (v != 0) rec.labels.insert(int(v));
        WSSEG_CHECK(!rec.labels.empty(), "synthetic: generated an empty mask");
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

}  // namespace wsseg

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

#include <memory>
#include <set>

#include <json.hpp>

#include "wsseg/augment.hpp"
#include "wsseg/cam_types.hpp"
#include "wsseg/dataset_io.hpp"
#include "wsseg/manifest.hpp"
#include "wsseg/metrics.hpp"
#include "wsseg/nn/checkpoint.hpp"
#include "wsseg/nn/optim.hpp"

namespace wsseg {

inline void to_json(nlohmann::json& j, const AugmentationConfig& c) {
    j = nlohmann::json{{"enable_flip", c.enable_flip},
                       {"flip_prob", c.flip_prob},
                       {"enable_shift", c.enable_shift},
                       {"shift_frac", c.shift_frac},
                       {"enable_scale", c.enable_scale},
                       {"scale_lo", c.scale_lo},
                       {"scale_hi", c.scale_hi},
                       {"enable_rotate", c.enable_rotate},
                       {"rotate_deg", c.rotate_deg},
                       {"enable_noise", c.enable_noise},
                       {"noise_var", c.noise_var},
                       {"enable_brightness_contrast", c.enable_brightness_contrast},
                       {"brightness_delta", c.brightness_delta},
                       {"contrast_delta", c.contrast_delta},
                       {"enable_median_blur", c.enable_median_blur},
                       {"blur_kernels", c.blur_kernels},
                       {"enable_rgb_shift", c.enable_rgb_shift},
                       {"rgb_shift", c.rgb_shift}};
}

inline void from_json(const nlohmann::json& j, AugmentationConfig& c) {
    AugmentationConfig d;
    c.enable_flip = j.value("enable_flip", d.enable_flip);
    c.flip_prob = j.value("flip_prob", d.flip_prob);
    c.enable_shift = j.value("enable_shift", d.enable_shift);
    c.shift_frac = j.value("shift_frac", d.shift_frac);
    c.enable_scale = j.value("enable_scale", d.enable_scale);
    c.scale_lo = j.value("scale_lo", d.scale_lo);
    c.scale_hi = j.value("scale_hi", d.scale_hi);
    c.enable_rotate = j.value("enable_rotate", d.enable_rotate);
    c.rotate_deg = j.value("rotate_deg", d.rotate_deg);
    c.enable_noise = j.value("enable_noise", d.enable_noise);
    c.noise_var = j.value("noise_var", d.noise_var);
    c.enable_brightness_contrast = j.value("enable_brightness_contrast", d.enable_brightness_contrast);
    c.brightness_delta = j.value("brightness_delta", d.brightness_delta);
    c.contrast_delta = j.value("contrast_delta", d.contrast_delta);
    c.enable_median_blur = j.value("enable_median_blur", d.enable_median_blur);
    c.blur_kernels = j.value("blur_kernels", d.blur_kernels);
    c.enable_rgb_shift = j.value("enable_rgb_shift", d.enable_rgb_shift);
    c.rgb_shift = j.value("rgb_shift", d.rgb_shift);
}

/// Step-1 classifier settings. Learning rates follow the two parameter
/// groups: the backbone ("pretrained part") and the appended convolutions.
struct ClassifierConfig {
    std::string backbone = "tiny";  // "vgg16" accepted only via supplied checkpoints
    int width = 24;                 // tiny backbone base width
    int appended_convs = 4;         // final one is the 1x1 scoring conv
    double lr_pretrained = 1e-4;
    double lr_appended = 1e-3;
    std::string optimizer = "adam";
    int epochs = 30;
    int batch_size = 16;
    int input_size = 0;  // 0 = native image size (must be uniform per batch)
    uint64_t seed = 1;
    AugmentationConfig augment = AugmentationConfig::all_on();

    void validate() const {
        WSSEG_CHECK(lr_pretrained > 0 && lr_appended > 0, "classifier: learning rates must be > 0");
        WSSEG_CHECK(epochs >= 0, "classifier: epochs must be >= 0");
        WSSEG_CHECK(batch_size >= 1, "classifier: batch_size must be >= 1");
        WSSEG_CHECK(appended_convs >= 1, "classifier: need at least the 1x1 scoring conv");
        if (optimizer != "adam" && optimizer != "sgd")
            throw ConfigError("classifier: unknown optimizer '" + optimizer + "'");
        augment.validate();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["backbone"] = backbone;
        j["width"] = width;
        j["appended_convs"] = appended_convs;
        j["lr_pretrained"] = lr_pretrained;
        j["lr_appended"] = lr_appended;
        j["optimizer"] = optimizer;
        j["epochs"] = epochs;
        j["batch_size"] = batch_size;
        j["input_size"] = input_size;
        j["seed"] = seed;
        nlohmann::json ja;
        wsseg::to_json(ja, augment);
        j["augment"] = ja;
        return j;
    }

    static ClassifierConfig from_json(const nlohmann::json& j) {
        ClassifierConfig c;
        c.backbone = j.value("backbone", c.backbone);
        c.width = j.value("width", c.width);
        c.appended_convs = j.value("appended_convs", c.appended_convs);
        c.lr_pretrained = j.value("lr_pretrained", c.lr_pretrained);
        c.lr_appended = j.value("lr_appended", c.lr_appended);
        c.optimizer = j.value("optimizer", c.optimizer);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.input_size = j.value("input_size", c.input_size);
        c.seed = j.value("seed", c.seed);
        if (j.contains("augment")) wsseg::from_json(j.at("augment"), c.augment);
        return c;
    }
};

inline constexpr int kBackboneStride = 4;

/// Shared small conv trunk (stride 4): also reused, frozen, by the step-2
/// branches.
inline std::unique_ptr<nn::Sequential> build_tiny_backbone(int width, Rng& rng) {
    auto s = std::make_unique<nn::Sequential>();
    s->emplace<nn::Conv2d>(3, width, 3, rng, 1, 1, -1, 0);
    s->emplace<nn::ReLU>();
    s->emplace<nn::MaxPool2>();
    s->emplace<nn::Conv2d>(width, 2 * width, 3, rng, 1, 1, -1, 0);
    s->emplace<nn::ReLU>();
    s->emplace<nn::MaxPool2>();
    return s;
}

inline int backbone_channels(int width) { return 2 * width; }
inline int backbone_param_count() { return 4; }  // two convs, weight+bias each

/// Multi-label classifier whose final appended layer is a 1x1 conv emitting C
/// score maps; classification logits are their spatial global average and the
/// score maps double as the CAMs.
class CamClassifier {
public:
    CamClassifier(const ClassifierConfig& cfg, int num_classes,
                  std::vector<std::string> class_names)
        : cfg_(cfg), num_classes_(num_classes), class_names_(std::move(class_names)) {
        cfg_.validate();
        if (cfg_.backbone != "tiny")
            throw ConfigError("backbone '" + cfg_.backbone +
                              "' requires externally supplied pretrained weights; build from a "
                              "checkpoint instead");
        WSSEG_CHECK(num_classes_ >= 1, "classifier: need at least one class");
        Rng rng(cfg_.seed);
        backbone_ = build_tiny_backbone(cfg_.width, rng);
        head_ = std::make_unique<nn::Sequential>();
        int ch = backbone_channels(cfg_.width);
        for (int i = 0; i < cfg_.appended_convs - 1; ++i) {
            head_->emplace<nn::Conv2d>(ch, ch, 3, rng, 1, 1, -1, 1);
            head_->emplace<nn::ReLU>();
        }
        head_->emplace<nn::Conv2d>(ch, num_classes_, 1, rng, 1, 1, -1, 1);
    }

    explicit CamClassifier(const nn::Checkpoint& ck)
        : CamClassifier(ClassifierConfig::from_json(ck.config.at("classifier")),
                        ck.config.at("num_classes").get<int>(), ck.class_names) {
        WSSEG_CHECK(ck.kind == "cam_classifier", "checkpoint is not a cam_classifier");
        nn::restore_params(ck, params());
    }

    int num_classes() const { return num_classes_; }
    const ClassifierConfig& config() const { return cfg_; }
    const std::vector<std::string>& class_names() const { return class_names_; }
    nn::Sequential& backbone() { return *backbone_; }

    std::vector<nn::Param*> params() {
        std::vector<nn::Param*> ps;
        backbone_->collect_params(ps);
        head_->collect_params(ps);
        return ps;
    }

    /// (n,3,H,W) -> C score maps at stride 4. H and W must be divisible by 4.
    Tensor score_maps(const Tensor& images, bool training) {
        if (images.c != 3) throw Error("classifier: expected 3 input channels");
        WSSEG_CHECK(images.h % kBackboneStride == 0 && images.w % kBackboneStride == 0,
                    "classifier: input dims must be multiples of the stride");
        WSSEG_CHECK(images.h >= 8 && images.w >= 8, "classifier: input below backbone minimum");
        return head_->forward(backbone_->forward(images, training), training);
    }

    Tensor backward(const Tensor& dscore) { return backbone_->backward(head_->backward(dscore)); }

    nn::Checkpoint to_checkpoint() {
        nlohmann::json cfg;
        cfg["classifier"] = cfg_.to_json();
        cfg["num_classes"] = num_classes_;
        return nn::snapshot_params("cam_classifier", cfg, class_names_, params());
    }

private:
    ClassifierConfig cfg_;
    int num_classes_;
    std::vector<std::string> class_names_;
    std::unique_ptr<nn::Sequential> backbone_, head_;
};

namespace detail {

inline Tensor prepare_input(const Tensor& image, int input_size) {
    Tensor img = image;
    if (input_size > 0 && (img.h != input_size || img.w != input_size))
        img = resize_bilinear(img, input_size, input_size);
    return img;
}

}  // namespace detail

/// Sigmoid scores of the spatially averaged score maps.
inline LabelScores predict_labels(CamClassifier& model, const Tensor& image) {
    Tensor maps = model.score_maps(detail::prepare_input(image, model.config().input_size), false);
    Tensor logits = nn::global_avg_pool(maps);
    LabelScores out;
    out.scores.resize(size_t(model.num_classes()));
    for (int c = 0; c < model.num_classes(); ++c)
        out.scores[size_t(c)] = nn::sigmoidf(logits.at(0, c, 0, 0));
    return out;
}

/// Mean BCE loss of the model on a manifest (no augmentation); the frozen
/// "loss went down" probe used by training tests.
inline double evaluate_bce(CamClassifier& model, const DatasetManifest& manifest) {
    WSSEG_CHECK(!manifest.records.empty(), "evaluate_bce: empty manifest");
    double total = 0;
    for (const auto& rec : manifest.records) {
        Tensor img = detail::prepare_input(load_record_image(rec), model.config().input_size);
        Tensor maps = model.score_maps(img, false);
        Tensor logits = nn::global_avg_pool(maps);
        Tensor targets(1, model.num_classes(), 1, 1);
        for (int l : rec.labels)
            if (l <= model.num_classes()) targets.at(0, l - 1, 0, 0) = 1.f;
        total += nn::bce_with_logits(logits, targets).loss;
    }
    return total / double(manifest.records.size());
}

namespace detail {

/// Shared training loop for the multi-label and binary-person classifiers.
/// target_of maps a record to its multi-hot target row.
template <typename TargetFn>
inline void train_core(CamClassifier& model, const std::vector<ImageRecord>& records,
                       const DatasetManifest* val, TargetFn&& target_of) {
    const ClassifierConfig& cfg = model.config();
    auto params = model.params();
    std::unique_ptr<nn::Adam> adam;
    std::unique_ptr<nn::Sgd> sgd;
    if (cfg.optimizer == "adam")
        adam = std::make_unique<nn::Adam>(params, std::vector<double>{cfg.lr_pretrained, cfg.lr_appended});
    else
        sgd = std::make_unique<nn::Sgd>(params, std::vector<double>{cfg.lr_pretrained, cfg.lr_appended}, 0.9);

    Rng root(cfg.seed);
    int C = model.num_classes();

    double best_f1 = -1.0;
    std::vector<Tensor> best_params;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = root.fork(uint64_t(epoch) + 1);
        std::vector<size_t> order(records.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        erng.shuffle(order);

        for (size_t start = 0; start < order.size(); start += size_t(cfg.batch_size)) {
            size_t end = std::min(order.size(), start + size_t(cfg.batch_size));
            int B = int(end - start);
            Tensor batch, targets(B, C, 1, 1);
            for (int b = 0; b < B; ++b) {
                const ImageRecord& rec = records[order[start + size_t(b)]];
                Tensor img = prepare_input(load_record_image(rec), cfg.input_size);
                // per-record stream keeps the sample order independent of
                // any loader parallelism
                Rng arng = root.fork((uint64_t(epoch) << 32) ^ fnv1a64(rec.image_id));
                img = augment(img, cfg.augment, arng);
                if (batch.empty()) batch = Tensor(B, 3, img.h, img.w);
                WSSEG_CHECK(img.h == batch.h && img.w == batch.w,
                            "classifier: images in a batch must share dimensions (set input_size)");
                std::copy(img.v.begin(), img.v.end(), batch.v.begin() + int64_t(b) * img.size());
                for (int c : target_of(rec)) targets.at(b, c - 1, 0, 0) = 1.f;
            }
            nn::zero_grads(params);
            Tensor maps = model.score_maps(batch, true);
            Tensor logits = nn::global_avg_pool(maps);
            auto loss = nn::bce_with_logits(logits, targets);
            model.backward(nn::global_avg_pool_backward(loss.grad, maps.h, maps.w));
            if (adam) adam->step();
            else sgd->step();
        }

        // model selection on validation macro-F1, when a validation split exists
        if (val && !val->records.empty()) {
            std::vector<std::set<int>> gt, pred;
            for (const auto& rec : val->records) {
                LabelScores s = predict_labels(model, load_record_image(rec));
                std::set<int> ps;
                for (int c = 1; c <= C; ++c)
                    if (s.for_class(c) > 0.5f) ps.insert(c);
                std::set<int> gs;
                for (int c : target_of(rec)) gs.insert(c);
                gt.push_back(gs);
                pred.push_back(ps);
            }
            double f1 = multilabel_f1(gt, pred, C).macro;
            if (f1 > best_f1) {
                best_f1 = f1;
                best_params.clear();
                for (auto* p : params) best_params.push_back(p->value);
            }
        }
    }
    if (!best_params.empty())
        for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_params[i];
}

}  // namespace detail

/// Trains the multi-label classifier with per-class sigmoid + BCE;
/// augmentation applies to the train split only. Zero epochs returns the
/// seeded initialization unchanged.
inline nn::Checkpoint train_classifier(const DatasetManifest& train, const DatasetManifest& val,
                                       const ClassifierConfig& cfg) {
    if (train.records.empty()) throw ConfigError("train_classifier: empty train manifest");
    CamClassifier model(cfg, train.num_classes(), train.class_names);
    detail::train_core(model, train.records, &val,
                       [](const ImageRecord& r) { return r.labels; });
    return model.to_checkpoint();
}

/// Per-class F1 on image-level labels at the given decision threshold.
inline F1Result evaluate_f1(CamClassifier& model, const DatasetManifest& manifest,
                            double threshold = 0.5) {
    if (manifest.records.empty()) throw ConfigError("evaluate_f1: empty manifest");
    std::vector<std::set<int>> gt, pred;
    for (const auto& rec : manifest.records) {
        LabelScores s = predict_labels(model, load_record_image(rec));
        std::set<int> ps;
        for (int c = 1; c <= model.num_classes(); ++c)
            if (s.for_class(c) > threshold) ps.insert(c);
        gt.push_back(rec.labels);
        pred.push_back(ps);
    }
    return multilabel_f1(gt, pred, model.num_classes());
}

/// Multi-scale (optionally flip-fused) CAM extraction. For every reported
/// class the score map is computed per scale (working resolutions snap to the
/// backbone stride so flipping stays exact), flipped variants are un-flipped,
/// everything is resized to the input resolution and averaged, negatives are
/// clamped and each class map is max-normalized. Classes come from gt_labels
/// when provided, else from predicted scores above report_threshold; an empty
/// selection yields an empty stack.
inline CamStack extract_cam(CamClassifier& model, const Tensor& image,
                            const std::vector<double>& scales, bool use_flip,
                            const std::set<int>& gt_labels = {}, double report_threshold = 0.5) {
    WSSEG_CHECK(!scales.empty(), "extract_cam: scales must be non-empty");
    CamStack stack;
    stack.h = image.h;
    stack.w = image.w;
    stack.source_scales = scales;

    std::set<int> selected = gt_labels;
    if (selected.empty()) {
        LabelScores s = predict_labels(model, image);
        for (int c = 1; c <= model.num_classes(); ++c)
            if (s.for_class(c) > report_threshold) selected.insert(c);
    }
    for (int c : selected)
        WSSEG_CHECK(c >= 1 && c <= model.num_classes(), "extract_cam: class id out of range");
    stack.class_ids.assign(selected.begin(), selected.end());
    int K = int(stack.class_ids.size());
    stack.maps = Tensor(1, K, image.h, image.w);
    if (K == 0) return stack;

    auto snap = [](double v) { return std::max(8, int(std::lround(v / 4.0) * 4)); };
    int variants = 0;
    for (double s : scales) {
        int sh = snap(image.h * s), sw = snap(image.w * s);
        Tensor scaled = resize_bilinear(image, sh, sw);
        for (int flip = 0; flip < (use_flip ? 2 : 1); ++flip) {
            Tensor input = flip ? flip_horizontal(scaled) : scaled;
            Tensor maps = model.score_maps(input, false);
            if (flip) maps = flip_horizontal(maps);
            Tensor full = resize_bilinear(maps, image.h, image.w);
            for (int k = 0; k < K; ++k) {
                int c = stack.class_ids[size_t(k)] - 1;
                const float* src = full.plane(0, c);
                float* dst = stack.maps.plane(0, k);
                for (int64_t i = 0; i < full.plane_size(); ++i) dst[i] += src[i];
            }
            ++variants;
        }
    }
    float inv = 1.f / float(variants);
    for (int k = 0; k < K; ++k) {
        float* m = stack.maps.plane(0, k);
        float mx = 0.f;
        for (int64_t i = 0; i < stack.maps.plane_size(); ++i) {
            m[i] = std::max(0.f, m[i] * inv);
            mx = std::max(mx, m[i]);
        }
        if (mx > 0.f)
            for (int64_t i = 0; i < stack.maps.plane_size(); ++i) m[i] /= mx;
    }
    return stack;
}

/// Keeps records whose every ground-truth label scores strictly above the
/// threshold; threshold 0 keeps everything (zero scores included).
inline DatasetManifest filter_confident(CamClassifier& model, const DatasetManifest& manifest,
                                        double threshold = 0.8) {
    DatasetManifest out;
    out.class_names = manifest.class_names;
    out.excluded_classes = manifest.excluded_classes;
    for (const auto& rec : manifest.records) {
        LabelScores s = predict_labels(model, load_record_image(rec));
        bool keep = true;
        for (int l : rec.labels)
            if (!(threshold == 0.0 || s.for_class(l) > threshold)) {
                keep = false;
                break;
            }
        if (keep) out.records.push_back(rec);
    }
    return out;
}

/// Binary person classifier: one sigmoid output, positive when the person
/// class id appears in the record labels. Train it on the manifest from
/// before the person exclusion.
inline nn::Checkpoint train_person_classifier(const DatasetManifest& manifest,
                                              const ClassifierConfig& cfg, int person_class_id) {
    WSSEG_CHECK(person_class_id >= 1 && person_class_id <= manifest.num_classes(),
                "person classifier: class id out of range");
    bool any_positive = false;
    for (const auto& r : manifest.records)
        if (r.labels.count(person_class_id)) { any_positive = true; break; }
    if (!any_positive)
        throw ConfigError("person classifier: no person-positive images available");

    CamClassifier model(cfg, 1,
                        {manifest.class_names[size_t(person_class_id - 1)]});
    detail::train_core(model, manifest.records, nullptr,
                       [person_class_id](const ImageRecord& r) {
                           return r.labels.count(person_class_id) ? std::set<int>{1}
                                                                  : std::set<int>{};
                       });
    nn::Checkpoint ck = model.to_checkpoint();
    ck.config["person_class_id"] = person_class_id;
    return ck;
}

/// Appends the person map as one more class map (re-normalized like the
/// others); class ids stay sorted. An existing map for the id is replaced.
inline CamStack merge_person_cam(const CamStack& stack, const Tensor& person_map,
                                 int person_class_id) {
    WSSEG_CHECK(person_map.c == 1 && person_map.h == stack.h && person_map.w == stack.w,
                "merge_person_cam: person map must be (1,1,H,W) aligned to the stack");
    std::vector<float> norm(person_map.v);
    float mx = 0.f;
    for (float& v : norm) {
        v = std::max(0.f, v);
        mx = std::max(mx, v);
    }
    if (mx > 0.f)
        for (float& v : norm) v /= mx;

    CamStack out;
    out.image_id = stack.image_id;
    out.h = stack.h;
    out.w = stack.w;
    out.source_scales = stack.source_scales;
    for (int id : stack.class_ids)
        if (id != person_class_id) out.class_ids.push_back(id);
    out.class_ids.push_back(person_class_id);
    std::sort(out.class_ids.begin(), out.class_ids.end());

    int K = int(out.class_ids.size());
    out.maps = Tensor(1, K, stack.h, stack.w);
    for (int k = 0; k < K; ++k) {
        int id = out.class_ids[size_t(k)];
        float* dst = out.maps.plane(0, k);
        if (id == person_class_id) {
            std::copy(norm.begin(), norm.end(), dst);
        } else {
            auto it = std::find(stack.class_ids.begin(), stack.class_ids.end(), id);
            const float* src = stack.maps.plane(0, int(it - stack.class_ids.begin()));
            std::copy(src, src + stack.maps.plane_size(), dst);
        }
    }
    return out;
}

}  // namespace wsseg

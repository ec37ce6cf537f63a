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

#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"
#include "wsseg/cam.hpp"
#include "wsseg/synthetic.hpp"

using namespace wsseg;

namespace {

ClassifierConfig tiny_config(int epochs = 0) {
    ClassifierConfig cfg;
    cfg.width = 8;
    cfg.epochs = epochs;
    cfg.batch_size = 8;
    cfg.seed = 11;
    cfg.augment = AugmentationConfig();  // off: keeps the unit tests fast and exact
    return cfg;
}

}  // namespace

TEST_CASE("classifier config defaults match the documented rates", "[cam]") {
    ClassifierConfig cfg;
    REQUIRE(cfg.lr_pretrained == 1e-4);
    REQUIRE(cfg.lr_appended == 1e-3);
    REQUIRE(cfg.optimizer == "adam");
    REQUIRE(cfg.appended_convs == 4);

    auto j = cfg.to_json();
    ClassifierConfig back = ClassifierConfig::from_json(j);
    REQUIRE(back.to_json() == j);
}

TEST_CASE("zero-epoch training leaves the checkpoint at initialization", "[cam]") {
    testutil::TempDir dir("cam0");
    SyntheticConfig scfg;
    scfg.n_images = 4;
    scfg.n_classes = 2;
    scfg.image_size = 32;
    DatasetManifest m = generate_synthetic_shapes(scfg, dir.str());

    ClassifierConfig cfg = tiny_config(0);
    nn::Checkpoint ck = train_classifier(m, m, cfg);

    CamClassifier fresh(cfg, m.num_classes(), m.class_names);
    auto ps = fresh.params();
    REQUIRE(ck.tensors.size() == ps.size());
    for (size_t i = 0; i < ps.size(); ++i) REQUIRE(ck.tensors[i].v == ps[i]->value.v);
}

TEST_CASE("predict_labels: range, determinism, channel check", "[cam]") {
    ClassifierConfig cfg = tiny_config();
    CamClassifier model(cfg, 3, {"a", "b", "c"});
    Rng rng(5);
    Tensor img = testutil::random_tensor(1, 3, 32, 32, rng);
    LabelScores s1 = predict_labels(model, img);
    LabelScores s2 = predict_labels(model, img);
    REQUIRE(s1.scores == s2.scores);
    for (float v : s1.scores) {
        REQUIRE(v >= 0.f);
        REQUIRE(v <= 1.f);
    }
    Tensor bad = testutil::random_tensor(1, 1, 32, 32, rng);
    REQUIRE_THROWS_AS(predict_labels(model, bad), Error);
}

TEST_CASE("extract_cam: single-scale stack is the raw normalized score map", "[cam]") {
    ClassifierConfig cfg = tiny_config();
    CamClassifier model(cfg, 3, {"a", "b", "c"});
    Rng rng(6);
    Tensor img = testutil::random_tensor(1, 3, 32, 32, rng);
    CamStack stack = extract_cam(model, img, {1.0}, false, {1, 2, 3});
    REQUIRE(stack.class_ids == std::vector<int>{1, 2, 3});

    // oracle: forward once, resize, clamp, max-normalize
    Tensor maps = model.score_maps(img, false);
    Tensor full = resize_bilinear(maps, 32, 32);
    for (int k = 0; k < 3; ++k) {
        float mx = 0.f;
        std::vector<float> want(size_t(full.plane_size()));
        const float* src = full.plane(0, k);
        for (int64_t i = 0; i < full.plane_size(); ++i) {
            want[size_t(i)] = std::max(0.f, src[i]);
            mx = std::max(mx, want[size_t(i)]);
        }
        if (mx > 0)
            for (auto& v : want) v /= mx;
        const float* got = stack.maps.plane(0, k);
        for (int64_t i = 0; i < full.plane_size(); ++i)
            REQUIRE(got[i] == Catch::Approx(want[size_t(i)]).margin(1e-6));
    }
}

TEST_CASE("extract_cam flip fusion commutes with mirroring", "[cam]") {
    ClassifierConfig cfg = tiny_config();
    CamClassifier model(cfg, 2, {"a", "b"});
    Rng rng(7);
    Tensor img = testutil::random_tensor(1, 3, 32, 32, rng);
    CamStack a = extract_cam(model, img, {0.5, 1.0, 1.5, 2.0}, true, {1, 2});
    CamStack b = extract_cam(model, flip_horizontal(img), {0.5, 1.0, 1.5, 2.0}, true, {1, 2});
    REQUIRE(testutil::max_abs_diff(b.maps, flip_horizontal(a.maps)) < 1e-5);
}

TEST_CASE("extract_cam: no class above threshold yields an empty stack", "[cam]") {
    ClassifierConfig cfg = tiny_config();
    CamClassifier model(cfg, 2, {"a", "b"});
    Rng rng(8);
    Tensor img = testutil::random_tensor(1, 3, 32, 32, rng);
    CamStack stack = extract_cam(model, img, {1.0}, false, {}, 1.1 /* impossible */);
    REQUIRE(stack.count() == 0);
    REQUIRE(stack.h == 32);
}

TEST_CASE("CamStack normalization invariant over 100 random cases", "[cam]") {
    ClassifierConfig cfg = tiny_config();
    CamClassifier model(cfg, 4, {"a", "b", "c", "d"});
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed + 50);
        Tensor img = testutil::random_tensor(1, 3, 32, 32, rng);
        std::set<int> labels;
        for (int c = 1; c <= 4; ++c)
            if (rng.uniform() < 0.6) labels.insert(c);
        if (labels.empty()) labels.insert(1);
        CamStack stack = extract_cam(model, img, {0.5, 1.0}, seed % 2 == 0, labels);
        for (int k = 0; k < stack.count(); ++k) {
            const float* m = stack.maps.plane(0, k);
            float mx = 0.f;
            for (int64_t i = 0; i < stack.maps.plane_size(); ++i) {
                REQUIRE(m[i] >= 0.f);
                REQUIRE(m[i] <= 1.f);
                mx = std::max(mx, m[i]);
            }
            REQUIRE((mx == 1.f || mx == 0.f));
        }
        // ids sorted ascending
        for (int k = 1; k < stack.count(); ++k)
            REQUIRE(stack.class_ids[size_t(k - 1)] < stack.class_ids[size_t(k)]);
    }
}

TEST_CASE("training reduces loss; overfit scores its labels high", "[cam]") {
    testutil::TempDir dir("camtrain");
    SyntheticConfig scfg;
    scfg.n_images = 40;
    scfg.n_classes = 2;
    scfg.image_size = 32;
    scfg.seed = 21;
    DatasetManifest m = generate_synthetic_shapes(scfg, dir.str());

    ClassifierConfig cfg0 = tiny_config(0);
    CamClassifier before(cfg0, m.num_classes(), m.class_names);
    double loss_before = evaluate_bce(before, m);

    ClassifierConfig cfg = tiny_config(10);
    nn::Checkpoint ck = train_classifier(m, m, cfg);
    CamClassifier after(ck);
    double loss_after = evaluate_bce(after, m);
    REQUIRE(loss_after < loss_before);

    // single-image overfit: true labels score > 0.9
    DatasetManifest one;
    one.class_names = m.class_names;
    one.records.push_back(m.records[0]);
    ClassifierConfig ocfg = tiny_config(60);
    ocfg.batch_size = 1;
    nn::Checkpoint ock = train_classifier(one, one, ocfg);
    CamClassifier omodel(ock);
    LabelScores s = predict_labels(omodel, load_record_image(one.records[0]));
    for (int l : one.records[0].labels) REQUIRE(s.for_class(l) > 0.9f);
}

TEST_CASE("filter_confident thresholds and monotonicity", "[cam]") {
    testutil::TempDir dir("camfilt");
    SyntheticConfig scfg;
    scfg.n_images = 10;
    scfg.n_classes = 2;
    scfg.image_size = 32;
    DatasetManifest m = generate_synthetic_shapes(scfg, dir.str());
    ClassifierConfig cfg = tiny_config();
    CamClassifier model(cfg, m.num_classes(), m.class_names);

    REQUIRE(filter_confident(model, m, 0.0).records.size() == m.records.size());
    REQUIRE(filter_confident(model, m, 1.0).records.empty());

    // monotone: higher threshold keeps a subset
    auto at = [&](double t) {
        std::set<std::string> ids;
        for (const auto& r : filter_confident(model, m, t).records) ids.insert(r.image_id);
        return ids;
    };
    auto loose = at(0.3), mid = at(0.5), strict = at(0.7);
    for (const auto& id : strict) REQUIRE(mid.count(id));
    for (const auto& id : mid) REQUIRE(loose.count(id));
}

TEST_CASE("checkpoint round trip preserves predictions", "[cam]") {
    testutil::TempDir dir("camck");
    ClassifierConfig cfg = tiny_config();
    CamClassifier model(cfg, 3, {"a", "b", "c"});
    nn::Checkpoint ck = model.to_checkpoint();
    nn::save_checkpoint(ck, dir.file("c.wssc"));
    CamClassifier back(nn::load_checkpoint(dir.file("c.wssc")));
    REQUIRE(back.class_names() == model.class_names());
    Rng rng(9);
    Tensor img = testutil::random_tensor(1, 3, 32, 32, rng);
    REQUIRE(predict_labels(model, img).scores == predict_labels(back, img).scores);
}

TEST_CASE("merge_person_cam: empty base and id ordering", "[cam]") {
    CamStack empty;
    empty.image_id = "x";
    empty.h = empty.w = 8;
    empty.maps = Tensor(1, 0, 8, 8);
    Tensor person(1, 1, 8, 8, 0.5f);
    person.at(0, 0, 3, 3) = 2.0f;  // un-normalized on purpose
    CamStack merged = merge_person_cam(empty, person, 4);
    REQUIRE(merged.class_ids == std::vector<int>{4});
    REQUIRE(merged.maps.at(0, 0, 3, 3) == 1.f);  // renormalized
    REQUIRE(merged.maps.at(0, 0, 0, 0) == Catch::Approx(0.25f));

    CamStack base;
    base.image_id = "y";
    base.h = base.w = 8;
    base.class_ids = {2, 5};
    base.maps = Tensor(1, 2, 8, 8, 0.1f);
    CamStack out = merge_person_cam(base, person, 3);
    REQUIRE(out.class_ids == std::vector<int>{2, 3, 5});
}

TEST_CASE("person classifier requires positive examples", "[cam]") {
    testutil::TempDir dir("campers");
    SyntheticConfig scfg;
    scfg.n_images = 6;
    scfg.n_classes = 2;
    scfg.image_size = 32;
    DatasetManifest m = generate_synthetic_shapes(scfg, dir.str());
    // strip class 2 from every record, then ask for its positives
    DatasetManifest stripped = exclude_class(m, 2);
    REQUIRE_THROWS_AS(train_person_classifier(stripped, tiny_config(1), 2), ConfigError);

    // trains when positives exist
    nn::Checkpoint ck = train_person_classifier(m, tiny_config(1), 2);
    REQUIRE(ck.config.at("person_class_id").get<int>() == 2);
    CamClassifier person(ck);
    REQUIRE(person.num_classes() == 1);
}

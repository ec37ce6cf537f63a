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
#include "wsseg/nn/checkpoint.hpp"
#include "wsseg/nn/layers.hpp"
#include "wsseg/nn/optim.hpp"

using namespace wsseg;
using namespace wsseg::nn;

namespace {

double weighted_sum(Layer& layer, const Tensor& x, const Tensor& weights) {
    Tensor y = layer.forward(x, true);
    REQUIRE(y.same_shape(weights));
    double s = 0;
    for (int64_t i = 0; i < y.size(); ++i) s += double(y.v[size_t(i)]) * weights.v[size_t(i)];
    return s;
}

/// Central-difference check of backward() against a scalar probe loss
/// sum(forward(x) * W) for both the input and every parameter. A perturbed
/// coordinate can step across a relu/maxpool kink, where finite differences
/// are simply wrong, so a small fraction of loose matches is allowed; wiring
/// bugs break most coordinates, not a few.
void gradcheck(Layer& layer, Tensor x, Rng& rng, double eps = 2e-3, double tol = 3e-2) {
    Tensor y = layer.forward(x, true);
    Tensor W = testutil::random_tensor(y.n, y.c, y.h, y.w, rng, -1.0, 1.0);

    std::vector<Param*> params;
    layer.collect_params(params);
    zero_grads(params);
    layer.forward(x, true);
    Tensor dx = layer.backward(W);

    auto tight = [&](double analytic, double numeric) {
        double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        return std::abs(analytic - numeric) / scale < tol;
    };
    auto probe = [&](float* slot) {
        float save = *slot;
        *slot = save + float(eps);
        double hi = weighted_sum(layer, x, W);
        *slot = save - float(eps);
        double lo = weighted_sum(layer, x, W);
        *slot = save;
        return (hi - lo) / (2 * eps);
    };

    // input coordinates: require a clear majority tight (>= 80%)
    int n_tight = 0;
    const int n_input = 24;
    for (int k = 0; k < n_input; ++k) {
        int64_t i = int64_t(rng.next_u64() % uint64_t(x.size()));
        n_tight += tight(dx.v[size_t(i)], probe(&x.v[size_t(i)]));
    }
    REQUIRE(n_tight * 5 >= n_input * 4);

    // each parameter tensor checked separately so a bias-only bug cannot hide
    for (Param* p : params) {
        int ok = 0;
        const int samples = 12;
        for (int k = 0; k < samples; ++k) {
            int64_t i = int64_t(rng.next_u64() % uint64_t(p->value.size()));
            ok += tight(p->grad.v[size_t(i)], probe(&p->value.v[size_t(i)]));
        }
        REQUIRE(ok * 5 >= samples * 4);
    }
}

}  // namespace

TEST_CASE("conv2d matches a direct correlation on a tiny case", "[nn]") {
    Rng rng(1);
    Conv2d conv(1, 1, 3, rng, 1, 1);
    std::vector<Param*> ps;
    conv.collect_params(ps);
    // kernel = delta at center => identity
    ps[0]->value.fill(0.f);
    ps[0]->value.at(0, 0, 1, 1) = 1.f;
    ps[1]->value.fill(0.f);
    Tensor x = testutil::random_tensor(1, 1, 5, 5, rng);
    Tensor y = conv.forward(x, false);
    REQUIRE(testutil::max_abs_diff(y, x) == 0.0);
}

TEST_CASE("conv2d output dims honor stride and dilation", "[nn]") {
    Rng rng(2);
    Conv2d strided(2, 3, 3, rng, 2, 1);
    Tensor x = testutil::random_tensor(1, 2, 8, 8, rng);
    Tensor y = strided.forward(x, false);
    REQUIRE(y.h == 4);
    REQUIRE(y.w == 4);

    Conv2d dilated(2, 3, 3, rng, 1, 2);  // same-pad keeps dims
    Tensor y2 = dilated.forward(x, false);
    REQUIRE(y2.h == 8);
    REQUIRE(y2.w == 8);
}

TEST_CASE("gradcheck conv2d (plain, strided, dilated, 1x1)", "[nn]") {
    Rng rng(3);
    {
        Conv2d l(2, 3, 3, rng);
        gradcheck(l, testutil::random_tensor(2, 2, 6, 6, rng, -1, 1), rng);
    }
    {
        Conv2d l(3, 2, 3, rng, 2);
        gradcheck(l, testutil::random_tensor(1, 3, 8, 8, rng, -1, 1), rng);
    }
    {
        Conv2d l(2, 2, 3, rng, 1, 2);
        gradcheck(l, testutil::random_tensor(1, 2, 7, 7, rng, -1, 1), rng);
    }
    {
        Conv2d l(4, 3, 1, rng);
        gradcheck(l, testutil::random_tensor(2, 4, 4, 4, rng, -1, 1), rng);
    }
}

TEST_CASE("gradcheck relu, maxpool, groupnorm, upsample, residual", "[nn]") {
    Rng rng(4);
    {
        ReLU l;
        gradcheck(l, testutil::random_tensor(2, 3, 5, 5, rng, -1, 1), rng);
    }
    {
        MaxPool2 l;
        gradcheck(l, testutil::random_tensor(1, 2, 6, 6, rng, -1, 1), rng);
    }
    {
        GroupNorm l(4, 2);
        gradcheck(l, testutil::random_tensor(2, 4, 4, 4, rng, -1, 1), rng, 2e-3, 5e-2);
    }
    {
        Upsample2x l;
        gradcheck(l, testutil::random_tensor(1, 2, 4, 5, rng, -1, 1), rng);
    }
    {
        ResidualBlock l(4, rng, 1, 2);
        gradcheck(l, testutil::random_tensor(1, 4, 6, 6, rng, -1, 1), rng, 2e-3, 5e-2);
    }
    {
        ResidualBlock l(4, rng, 2, 2);  // dilated variant
        gradcheck(l, testutil::random_tensor(1, 4, 8, 8, rng, -1, 1), rng, 2e-3, 5e-2);
    }
}

TEST_CASE("gradcheck sequential stack", "[nn]") {
    Rng rng(5);
    Sequential net;
    net.emplace<Conv2d>(2, 4, 3, rng);
    net.emplace<ReLU>();
    net.emplace<MaxPool2>();
    net.emplace<Conv2d>(4, 3, 1, rng);
    gradcheck(net, testutil::random_tensor(1, 2, 6, 6, rng, -1, 1), rng);
}

TEST_CASE("bce_with_logits: loss value and gradient", "[nn]") {
    Tensor logits(1, 2, 1, 1);
    logits.v = {0.5f, -1.0f};
    Tensor targets(1, 2, 1, 1);
    targets.v = {1.f, 0.f};
    auto res = bce_with_logits(logits, targets);
    double want = (std::log1p(std::exp(-0.5)) + std::log1p(std::exp(-1.0))) / 2.0;
    REQUIRE(res.loss == Catch::Approx(want).margin(1e-6));
    REQUIRE(res.grad.v[0] == Catch::Approx((sigmoidf(0.5f) - 1.0) / 2.0).margin(1e-6));
    REQUIRE(res.grad.v[1] == Catch::Approx(sigmoidf(-1.0f) / 2.0).margin(1e-6));
}

TEST_CASE("softmax_ce_ignore: gradient and ignore handling", "[nn]") {
    Tensor logits(1, 3, 1, 2);
    logits.v = {1.f, 0.f, 0.f, 2.f, -1.f, 0.5f};  // layout (c,y,x): c0:(1,0), c1:(0,2), c2:(-1,0.5)
    LabelMask t(1, 2);
    t.at(0, 0) = 2;
    t.at(0, 1) = 255;  // ignored
    auto res = softmax_ce_ignore(logits, {t});
    REQUIRE(res.count == 1);
    // pixel 0: logits (1, 0, -1) -> softmax
    double e0 = std::exp(0.0), e1 = std::exp(-1.0), e2 = std::exp(-2.0);
    double z = e0 + e1 + e2;
    REQUIRE(res.loss == Catch::Approx(-std::log(e2 / z)).margin(1e-5));
    REQUIRE(res.grad.at(0, 0, 0, 0) == Catch::Approx(e0 / z).margin(1e-5));
    REQUIRE(res.grad.at(0, 2, 0, 0) == Catch::Approx(e2 / z - 1.0).margin(1e-5));
    // ignored pixel contributes nothing
    REQUIRE(res.grad.at(0, 0, 0, 1) == 0.f);

    LabelMask all_ignore(1, 2, 255);
    auto res2 = softmax_ce_ignore(logits, {all_ignore});
    REQUIRE(res2.count == 0);
    for (float g : res2.grad.v) REQUIRE(g == 0.f);
}

TEST_CASE("sgd with momentum and weight decay minimizes a quadratic", "[nn]") {
    Param p;
    p.init(1, 1, 1, 1);
    p.value.v[0] = 10.f;
    Sgd opt({&p}, {0.1}, 0.9, 0.0);
    for (int i = 0; i < 200; ++i) {
        p.grad.v[0] = 2.f * (p.value.v[0] - 3.f);
        opt.step();
    }
    REQUIRE(p.value.v[0] == Catch::Approx(3.f).margin(1e-3));

    // weight decay pulls toward zero when the data gradient vanishes
    Param q;
    q.init(1, 1, 1, 1);
    q.value.v[0] = 1.f;
    Sgd opt2({&q}, {0.1}, 0.0, 0.5);
    for (int i = 0; i < 100; ++i) {
        q.grad.v[0] = 0.f;
        opt2.step();
    }
    REQUIRE(std::abs(q.value.v[0]) < 1e-2);
}

TEST_CASE("adam minimizes a quadratic and honors per-group rates", "[nn]") {
    Param slow, fast;
    slow.init(1, 1, 1, 1);
    fast.init(1, 1, 1, 1);
    slow.value.v[0] = fast.value.v[0] = 4.f;
    slow.group = 0;
    fast.group = 1;
    Adam opt({&slow, &fast}, {1e-3, 1e-1});
    for (int i = 0; i < 50; ++i) {
        slow.grad.v[0] = 2.f * slow.value.v[0];
        fast.grad.v[0] = 2.f * fast.value.v[0];
        opt.step();
    }
    REQUIRE(std::abs(fast.value.v[0]) < std::abs(slow.value.v[0]));
}

TEST_CASE("checkpoint save/load restores parameters bit-exactly", "[nn]") {
    testutil::TempDir dir("ckpt");
    Rng rng(6);
    Sequential net;
    net.emplace<Conv2d>(3, 4, 3, rng);
    net.emplace<Conv2d>(4, 2, 1, rng);
    std::vector<Param*> ps;
    net.collect_params(ps);

    nlohmann::json cfg = {{"width", 4}};
    Checkpoint ck = snapshot_params("cam_classifier", cfg, {"a", "b"}, ps);
    save_checkpoint(ck, dir.file("m.wssc"));
    Checkpoint back = load_checkpoint(dir.file("m.wssc"));
    REQUIRE(back.kind == "cam_classifier");
    REQUIRE(back.class_names == std::vector<std::string>{"a", "b"});
    REQUIRE(back.config == cfg);
    REQUIRE(back.tensors.size() == ps.size());
    for (size_t i = 0; i < ps.size(); ++i)
        REQUIRE(back.tensors[i].v == ps[i]->value.v);

    // restoring into a freshly built net with a different rng reproduces outputs
    Rng rng2(999);
    Sequential net2;
    net2.emplace<Conv2d>(3, 4, 3, rng2);
    net2.emplace<Conv2d>(4, 2, 1, rng2);
    std::vector<Param*> ps2;
    net2.collect_params(ps2);
    restore_params(back, ps2);
    Rng rx(7);
    Tensor x = testutil::random_tensor(1, 3, 6, 6, rx);
    REQUIRE(testutil::max_abs_diff(net.forward(x, false), net2.forward(x, false)) == 0.0);

    REQUIRE_THROWS_AS(load_checkpoint(dir.file("missing.wssc")), IoError);
}

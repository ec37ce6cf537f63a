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
#include "wsseg/image.hpp"
#include "wsseg/image_io.hpp"
#include "wsseg/parallel.hpp"
#include "wsseg/rng.hpp"

using namespace wsseg;

TEST_CASE("rng is deterministic and fork streams are independent", "[core]") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng base(7);
    Rng f1 = base.fork(1), f2 = base.fork(2);
    REQUIRE(f1.next_u64() != f2.next_u64());

    // uniform stays in [0,1), normal has sane spread
    Rng r(3);
    double sum = 0, sq = 0;
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        double z = r.normal();
        sum += z;
        sq += z * z;
    }
    REQUIRE(std::abs(sum / 10000) < 0.05);
    REQUIRE(std::abs(sq / 10000 - 1.0) < 0.1);
}

TEST_CASE("uniform_int covers bounds", "[core]") {
    Rng r(11);
    bool lo = false, hi = false;
    for (int i = 0; i < 1000; ++i) {
        int v = r.uniform_int(2, 5);
        REQUIRE(v >= 2);
        REQUIRE(v <= 5);
        lo |= v == 2;
        hi |= v == 5;
    }
    REQUIRE(lo);
    REQUIRE(hi);
}

TEST_CASE("parallel_for covers every index exactly once", "[core]") {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, [&](int64_t b, int64_t e) {
        for (int64_t i = b; i < e; ++i) hits[size_t(i)]++;
    });
    for (int h : hits) REQUIRE(h == 1);
}

TEST_CASE("flip_horizontal is an involution", "[core]") {
    Rng rng(5);
    Tensor t = testutil::random_tensor(1, 3, 7, 9, rng);
    REQUIRE(testutil::max_abs_diff(flip_horizontal(flip_horizontal(t)), t) == 0.0);
}

TEST_CASE("resize_bilinear identity and flip commutation", "[core]") {
    Rng rng(6);
    Tensor t = testutil::random_tensor(1, 2, 16, 12, rng);
    REQUIRE(testutil::max_abs_diff(resize_bilinear(t, 16, 12), t) == 0.0);

    // resize(mirror(x)) == mirror(resize(x)) within float rounding
    Tensor a = resize_bilinear(flip_horizontal(t), 24, 30);
    Tensor b = flip_horizontal(resize_bilinear(t, 24, 30));
    REQUIRE(testutil::max_abs_diff(a, b) < 1e-5);

    // constant image stays constant under resize
    Tensor c(1, 1, 8, 8, 0.37f);
    Tensor cr = resize_bilinear(c, 13, 5);
    for (float v : cr.v) REQUIRE(v == Catch::Approx(0.37f).epsilon(1e-6));
}

TEST_CASE("avg_downsample averages blocks", "[core]") {
    Tensor t(1, 1, 2, 2);
    t.v = {1.f, 2.f, 3.f, 6.f};
    Tensor d = avg_downsample(t, 2);
    REQUIRE(d.h == 1);
    REQUIRE(d.v[0] == Catch::Approx(3.0f));
}

TEST_CASE("ppm/pgm round-trip is exact at 8-bit resolution", "[core]") {
    testutil::TempDir dir("imgio");
    Rng rng(9);
    Tensor img(1, 3, 5, 4);
    for (auto& v : img.v) v = float(rng.uniform_int(0, 255)) / 255.f;  // exactly representable
    write_ppm(dir.file("a.ppm"), img);
    Tensor back = read_ppm(dir.file("a.ppm"));
    REQUIRE(testutil::max_abs_diff(img, back) < 1e-6);

    LabelMask m(3, 7);
    for (size_t i = 0; i < m.v.size(); ++i) m.v[i] = uint8_t((i * 37) % 256);
    write_pgm(dir.file("m.pgm"), m);
    LabelMask mb = read_pgm(dir.file("m.pgm"));
    REQUIRE(mb.v == m.v);
}

TEST_CASE("pgm rejects wrong magic", "[core]") {
    testutil::TempDir dir("imgio2");
    std::ofstream(dir.file("bad.pgm")) << "P2\n1 1\n255\n0\n";
    REQUIRE_THROWS_AS(read_pgm(dir.file("bad.pgm")), FormatError);
}

TEST_CASE("pad_reflect mirrors borders", "[core]") {
    Tensor t(1, 1, 1, 3);
    t.v = {1.f, 2.f, 3.f};
    Tensor p = pad_reflect(t, 0, 0, 2, 2);
    std::vector<float> want = {3.f, 2.f, 1.f, 2.f, 3.f, 2.f, 1.f};
    REQUIRE(p.v == want);
}

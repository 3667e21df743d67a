// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "relaydiff/codec.hpp"
#include "relaydiff/image_io.hpp"
#include "relaydiff/rng.hpp"

using namespace relaydiff;

namespace {

Grid random_pixels(int c, int h, int w, Rng& rng) {
    Grid g(c, h, w);
    for (double& v : g.data) v = rng.uniform();
    return g;
}

}  // namespace

TEST_CASE("codec round trip is exact to 1e-12") {
    Rng rng(42);
    for (int factor : {2, 3}) {
        SpaceToDepthCodec codec(factor);
        const Grid x = random_pixels(1, 12, 12, rng);
        const Grid z = codec.encode(x);
        CHECK(z.channels == factor * factor);
        CHECK(z.height == 12 / factor);
        const Grid back = codec.decode(z);
        CHECK(linf_diff(back, x) <= 1e-12);
    }
}

TEST_CASE("codec shape contract and errors") {
    SpaceToDepthCodec codec(2);
    Rng rng(1);
    const Grid x = random_pixels(1, 32, 32, rng);
    const Grid z = codec.encode(x);
    CHECK(z.channels == 4);
    CHECK(z.height == 16);
    CHECK(z.width == 16);

    const Grid odd = random_pixels(1, 31, 32, rng);
    CHECK_THROWS_AS(codec.encode(odd), std::invalid_argument);

    Grid bad_latent(3, 8, 8, 0.0);
    CHECK_THROWS_AS(codec.decode(bad_latent), std::invalid_argument);
}

TEST_CASE("codec preserves norms (orthogonality)") {
    SpaceToDepthCodec codec(2);
    Rng rng(7);
    for (int rep = 0; rep < 8; ++rep) {
        const Grid x = random_pixels(2, 16, 16, rng);
        const Grid z = codec.encode(x);
        const double nx = std::sqrt(squared_norm(x));
        const double nz = std::sqrt(squared_norm(z));
        CHECK(std::fabs(nx - nz) / nx <= 1e-12);
    }
}

TEST_CASE("codec is linear: encode of a blend equals blend of encodes") {
    SpaceToDepthCodec codec(2);
    Rng rng(9);
    const Grid x = random_pixels(1, 8, 8, rng);
    const Grid y = random_pixels(1, 8, 8, rng);
    const double a = 0.3, b = 0.7;
    const Grid blend = lerp2(a, x, b, y);
    const Grid lhs = codec.encode(blend);
    const Grid rhs = lerp2(a, codec.encode(x), b, codec.encode(y));
    CHECK(linf_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("resize identity and constants") {
    Rng rng(3);
    const Grid x = random_pixels(1, 8, 8, rng);
    CHECK(linf_diff(resize(x, 8, 8, ResizeMode::bilinear_up), x) == 0.0);
    CHECK(linf_diff(resize(x, 8, 8, ResizeMode::bilinear_down), x) == 0.0);

    Grid c(1, 4, 4, 0.37);
    const Grid up = resize(c, 8, 8, ResizeMode::bilinear_up);
    for (double v : up.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
    const Grid down = resize(up, 4, 4, ResizeMode::bilinear_down);
    for (double v : down.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
}

TEST_CASE("2x bilinear upsample of a 2x2 checkerboard matches hand-computed weights") {
    // Half-pixel convention: output sample o maps to (o + 0.5)/2 - 0.5, so the
    // four row positions hit source coordinates -0.25, 0.25, 0.75, 1.25 and the
    // weight of source row 0 is 1, 0.75, 0.25, 0 after clamping.
    Grid cb(1, 2, 2, 0.0);
    cb.at(0, 0, 0) = 1.0;
    cb.at(0, 1, 1) = 1.0;
    const double w0[4] = {1.0, 0.75, 0.25, 0.0};
    const Grid up = resize_bilinear_up(cb, 4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            const double expected = w0[y] * w0[x] + (1.0 - w0[y]) * (1.0 - w0[x]);
            CHECK(up.at(0, y, x) == doctest::Approx(expected).epsilon(1e-14));
        }
    }
}

TEST_CASE("area downsample averages 2x2 blocks at integer factor") {
    Grid x(1, 4, 4, 0.0);
    for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 4; ++xx) x.at(0, y, xx) = y * 4 + xx;
    const Grid down = resize_area_down(x, 2, 2);
    CHECK(down.at(0, 0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
    CHECK(down.at(0, 1, 1) == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
}

TEST_CASE("ppm round trip at quantized values") {
    Rng rng(21);
    Grid img(3, 6, 5);
    for (double& v : img.data)
        v = static_cast<double>(rng.uniform_index(256)) / 255.0;
    const std::string path = "test_roundtrip.ppm";
    write_ppm(path, img);
    const Grid back = read_ppm(path);
    CHECK(back.channels == 3);
    CHECK(linf_diff(back, img) <= 1e-12);
    std::remove(path.c_str());
}

TEST_CASE("ppm grayscale write replicates channels") {
    Grid img(1, 2, 2, 0.5);
    const std::string path = "test_gray.ppm";
    write_ppm(path, img);
    const Grid back = read_ppm(path);
    CHECK(back.channels == 3);
    for (int c = 0; c < 3; ++c)
        CHECK(back.at(c, 0, 0) == doctest::Approx(0.5).epsilon(2.0 / 255));
    std::remove(path.c_str());
}

TEST_CASE("latent dump round trip is bitwise") {
    Rng rng(5);
    Grid lat(4, 3, 7);
    for (double& v : lat.data) v = rng.normal();
    const std::string path = "test_latent.rlat";
    write_latent(path, lat, 2);
    const LatentFile f = read_latent(path);
    CHECK(f.factor == 2);
    CHECK(f.latent.same_shape(lat));
    for (std::size_t i = 0; i < lat.data.size(); ++i)
        CHECK(f.latent.data[i] == lat.data[i]);
    std::remove(path.c_str());
}

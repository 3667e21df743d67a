// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "relaydiff/denoiser.hpp"
#include "relaydiff/sampler.hpp"
#include "relaydiff/tiling.hpp"
#include "test_helpers.hpp"

using namespace relaydiff;
using relaydiff::testing::random_grid;

namespace {

NoiseSchedule random_monotone_schedule(int T, Rng& rng) {
    NoiseSchedule s;
    s.T = T;
    s.rule = ScheduleRule::linear;
    s.sigma.assign(T + 1, 0.0);
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        acc += rng.uniform(0.01, 0.1);
        s.sigma[t] = acc;
    }
    s.sigma_max = acc;
    return s;
}

}  // namespace

TEST_CASE("relay coefficients match the deterministic form and sum to one") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 1000, 1.0);
    const RelayConfig relay = make_relay_config(sched, 500);

    for (int t : {2, 10, 137, 500}) {
        const RelayCoefficients k = relay_coefficients(t, sched, relay);
        CHECK(k.a == doctest::Approx(sched.at(t - 1) / sched.at(t)).epsilon(1e-15));
        CHECK(k.b == doctest::Approx(1.0 / t).epsilon(1e-15));
        CHECK(std::fabs(k.a + k.b + k.c - 1.0) <= 1e-12);
    }

    // t = 1 with sigma_0 = 0 and delta_1 = 0: the final step returns the
    // prediction exactly.
    const RelayCoefficients last = relay_coefficients(1, sched, relay);
    CHECK(last.a == 0.0);
    CHECK(last.b == 1.0);
    CHECK(last.c == 0.0);
}

TEST_CASE("relay coefficient sums hold on random schedules") {
    Rng rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        const int T = 10 + static_cast<int>(rng.uniform_index(200));
        const NoiseSchedule sched = random_monotone_schedule(T, rng);
        const RelayConfig relay = make_relay_config(
            sched, std::max(2, T / 2),
            DeltaProfile{DeltaProfile::Kind::sigma_prev_scale, rng.uniform(0.0, 1.0)});
        const int t = 1 + static_cast<int>(rng.uniform_index(relay.T_r));
        const RelayCoefficients k = relay_coefficients(t, sched, relay);
        CHECK(std::fabs(k.a + k.b + k.c - 1.0) <= 1e-12);
    }
}

TEST_CASE("relay coefficient domain errors") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    RelayConfig relay = make_relay_config(sched, 50);
    CHECK_THROWS_AS(relay_coefficients(0, sched, relay), std::out_of_range);
    relay.delta[10] = sched.at(9) + 0.1;  // delta_t > sigma_{t-1}
    CHECK_THROWS_AS(relay_coefficients(10, sched, relay), std::domain_error);
}

TEST_CASE("step grid covers endpoints") {
    const std::vector<int> g1 = make_step_grid(1000, 50);
    CHECK(g1.front() == 1000);
    CHECK(g1[g1.size() - 2] == 1);
    CHECK(g1.back() == 0);
    CHECK(g1.size() == 51);
    for (std::size_t i = 1; i < g1.size(); ++i) CHECK(g1[i] < g1[i - 1]);

    const std::vector<int> g2 = make_step_grid(500, 500);
    CHECK(g2.size() == 501);
    for (std::size_t i = 0; i < g2.size(); ++i)
        CHECK(g2[i] == 500 - static_cast<int>(i));

    CHECK_THROWS_AS(make_step_grid(10, 11), std::out_of_range);
    CHECK(make_step_grid(10, 1) == std::vector<int>({10, 0}));
}

TEST_CASE("oracle trajectory identity along the full relay path") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 200, 1.0);
    const RelayConfig relay = make_relay_config(sched, 100);
    Rng rng(31);
    const Grid z0 = random_grid(1, 4, 4, rng);
    const Grid zL = random_grid(1, 4, 4, rng);
    DenoiserPtr oracle = oracle_fixed(z0);

    Grid eps;
    double worst = 0.0;
    double worst_direction = 0.0;
    RelaySampleOptions opts;
    opts.observer = [&](int t, const Grid& state, const Grid&) {
        if (t == relay.T_r) {
            eps = Grid(state.channels, state.height, state.width);
            for (std::size_t i = 0; i < eps.data.size(); ++i)
                eps.data[i] = (state.data[i] - zL.data[i]) / sched.at(relay.T_r);
            return;
        }
        // State identity z_t = z0^t + sigma_t eps.
        Grid expected = blur_transition(z0, zL, t, relay.T_r);
        for (std::size_t i = 0; i < expected.data.size(); ++i)
            expected.data[i] += sched.at(t) * eps.data[i];
        worst = std::max(worst, linf_diff(state, expected));
        // Noise-direction preservation: (z_t - z0^t)/sigma_t stays equal to eps.
        if (t >= 1) {
            const Grid anchor_true = blur_transition(z0, zL, t, relay.T_r);
            for (std::size_t i = 0; i < eps.data.size(); ++i) {
                const double dir =
                    (state.data[i] - anchor_true.data[i]) / sched.at(t);
                worst_direction =
                    std::max(worst_direction, std::fabs(dir - eps.data[i]));
            }
        }
    };
    const Grid out = relay_sample(zL, *oracle, std::nullopt, sched, relay, rng, opts);
    CHECK(worst <= 1e-9);
    CHECK(worst_direction <= 1e-7);
    CHECK(linf_diff(out, z0) <= 1e-9);
}

TEST_CASE("relay sampler degenerate cases") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    Rng rng(3);
    const Grid z0 = random_grid(1, 3, 3, rng);
    const Grid zL = random_grid(1, 3, 3, rng);
    DenoiserPtr oracle = oracle_fixed(z0);

    // T_r = 0 guard: empty loop, input unchanged.
    RelayConfig empty;
    empty.T_r = 0;
    empty.delta = {0.0};
    const Grid out0 = relay_sample(zL, *oracle, std::nullopt, sched, empty, rng);
    CHECK(linf_diff(out0, zL) == 0.0);

    // T_r = 1: single step returns the prediction exactly.
    const RelayConfig one = make_relay_config(sched, 1);
    const Grid out1 = relay_sample(zL, *oracle, std::nullopt, sched, one, rng);
    CHECK(linf_diff(out1, z0) == 0.0);
}

TEST_CASE("strided relay sampling recovers the oracle target exactly") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 1000, 1.0);
    const RelayConfig relay = make_relay_config(sched, 500);
    Rng rng(41);
    const Grid z0 = random_grid(2, 3, 3, rng);
    const Grid zL = random_grid(2, 3, 3, rng);
    DenoiserPtr oracle = oracle_fixed(z0);
    for (int steps : {1, 2, 10, 500}) {
        RelaySampleOptions opts;
        opts.steps = steps;
        Rng r2(99);
        const Grid out =
            relay_sample(zL, *oracle, std::nullopt, sched, relay, r2, opts);
        CHECK(linf_diff(out, z0) <= 1e-9);
    }
}

TEST_CASE("constant-field preservation through relay updates") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    const RelayConfig relay = make_relay_config(sched, 50);
    const double k = 0.6180339887;
    Grid constant(1, 2, 2, k);

    // With z_t = z0hat = anchor = k, every update must return k (a+b+c = 1).
    for (int t : {2, 17, 50}) {
        const RelayCoefficients co = relay_coefficients(t, sched, relay);
        const Grid stepped = lerp3(co.a, constant, co.b, constant, co.c, constant);
        CHECK(linf_diff(stepped, constant) <= 1e-12);
    }
}

TEST_CASE("relay sampler rejects non-finite predictions with step context") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    const RelayConfig relay = make_relay_config(sched, 10);
    struct Bad final : Denoiser {
        Grid predict(const Grid& z, int, ConditionId,
                     std::optional<double>) const override {
            Grid out = z;
            out.data[0] = std::nan("");
            return out;
        }
        Stage stage() const override { return Stage::super_resolution; }
    } bad;
    Rng rng(1);
    Grid zL(1, 2, 2, 0.0);
    CHECK_THROWS_WITH_AS(relay_sample(zL, bad, std::nullopt, sched, relay, rng),
                         doctest::Contains("t=10"), std::runtime_error);
}

TEST_CASE("base sampler oracle identities") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 1000, 1.0);
    Rng rng(51);
    const Grid z0 = random_grid(1, 4, 4, rng);
    DenoiserPtr oracle = oracle_fixed(z0, Stage::base);
    Grid noise = randn_like(z0, rng);

    // One step is exact; any step count matches it (deterministic oracle path).
    const Grid one = base_sample(noise, *oracle, std::nullopt, sched, 1);
    CHECK(linf_diff(one, z0) <= 1e-12);
    const Grid many = base_sample(noise, *oracle, std::nullopt, sched, 1000);
    CHECK(linf_diff(many, one) <= 1e-9);

    CHECK_THROWS_AS(base_sample(noise, *oracle, std::nullopt, sched, 1001),
                    std::out_of_range);
    CHECK_THROWS_AS(base_sample(noise, *oracle, std::nullopt, sched, 0),
                    std::out_of_range);
}

TEST_CASE("base sampler with the posterior-mean oracle reproduces the data Gaussian") {
    // Everything is affine-Gaussian, so the exact output law of the sampler
    // propagates in closed form; Monte Carlo must match it, and it must sit
    // close to the data Gaussian (the strided deterministic sampler contracts
    // variance by O(sum of squared sigma increments)).
    const int T = 100;
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, T, 1.0);
    const RelayConfig relay = make_relay_config(sched, 50);
    const double mu = 0.3, var = 0.5;
    DenoiserPtr oracle = oracle_gaussian(Grid(1, 1, 1, mu), Grid(1, 1, 1, var),
                                         Stage::base, sched, relay);

    const int steps = 50;
    const std::vector<int> nodes = make_step_grid(T, steps);
    double gain = 1.0;  // coefficient of the start noise in the current state
    double offset = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const int t = nodes[i], s = nodes[i + 1];
        const double st = sched.at(t), ss = sched.at(s);
        const double r = ss / st;
        const double k = var / (var + st * st);  // pred = k z + (1-k) mu
        const double slope = r + (1.0 - r) * k;
        offset = slope * offset + (1.0 - r) * (1.0 - k) * mu;
        gain *= slope;
    }
    const double exact_mean = offset;  // start state has mean zero
    const double exact_var = gain * gain * sched.at(T) * sched.at(T);
    CHECK(exact_mean == doctest::Approx(mu).epsilon(1e-9));
    CHECK(std::fabs(exact_var - var) / var < 0.05);  // discretization deficit

    const int n = 100000;
    Rng rng(7);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        Grid noise(1, 1, 1, sched.at(T) * rng.normal());
        const Grid out = base_sample(noise, *oracle, std::nullopt, sched, steps);
        sum += out.data[0];
        sumsq += out.data[0] * out.data[0];
    }
    const double mc_mean = sum / n;
    const double mc_var = (sumsq - n * mc_mean * mc_mean) / (n - 1);
    const double se_mean = std::sqrt(exact_var / n);
    CHECK(std::fabs(mc_mean - exact_mean) <= 3.0 * se_mean);
    const double se_var = exact_var * std::sqrt(2.0 / (n - 1));
    CHECK(std::fabs(mc_var - exact_var) <= 3.0 * se_var);
}

TEST_CASE("relay marginal mean with the gaussian posterior-mean oracle") {
    // With the prior centered on the true z0, predictions are unbiased and the
    // per-step mean follows the blur line of z0 for any prior variance.
    const int T = 100;
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, T, 1.0);
    const RelayConfig relay = make_relay_config(
        sched, 50, DeltaProfile{DeltaProfile::Kind::sigma_prev_scale, 0.5});
    const double z0 = 1.3, zL = 0.4, var = 0.25;
    DenoiserPtr oracle = oracle_gaussian(Grid(1, 1, 1, z0), Grid(1, 1, 1, var),
                                         Stage::super_resolution, sched, relay,
                                         Grid(1, 1, 1, zL));

    const int n = 20000;
    const int probe_t = 25;
    double sum = 0.0;
    Rng root(12345);
    Grid zl_grid(1, 1, 1, zL);
    for (int i = 0; i < n; ++i) {
        Rng rng = root.fork(i);
        RelaySampleOptions opts;
        double seen = 0.0;
        opts.observer = [&](int t, const Grid& state, const Grid&) {
            if (t == probe_t) seen = state.data[0];
        };
        (void)relay_sample(zl_grid, *oracle, std::nullopt, sched, relay, rng, opts);
        sum += seen;
    }
    const double expect =
        (static_cast<double>(relay.T_r - probe_t) / relay.T_r) * z0 +
        (static_cast<double>(probe_t) / relay.T_r) * zL;
    // Conservative bound: per-step deviations are O(sigma)-scale, sigma <= 0.5.
    const double se = std::sqrt(1.0 / n);
    CHECK(std::fabs(sum / n - expect) <= 3.0 * se);
}

TEST_CASE("tiled denoise degenerate and exact cases") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    const RelayConfig relay = make_relay_config(sched, 50);
    // 1x1 receptive field: pointwise posterior-mean oracle with scalar prior.
    DenoiserPtr pointwise = oracle_gaussian(Grid(1, 1, 1, 0.2), Grid(1, 1, 1, 0.7),
                                            Stage::base, sched, relay);
    Rng rng(61);
    const Grid z = random_grid(3, 24, 24, rng);

    // Single tile covering everything: identical to the direct call.
    TileConfig whole{24, 24, 4, TileBlend::uniform};
    const Grid direct = pointwise->predict(z, 10, std::nullopt, std::nullopt);
    CHECK(linf_diff(
              tiled_denoise(*pointwise, z, 10, std::nullopt, std::nullopt, whole),
              direct) == 0.0);
    // Oversized tile falls back to the same.
    TileConfig oversized{64, 64, 8, TileBlend::gaussian_weight};
    CHECK(linf_diff(tiled_denoise(*pointwise, z, 10, std::nullopt, std::nullopt,
                                  oversized),
                    direct) == 0.0);

    // Overlapping tiles with a pointwise denoiser blend exactly.
    for (TileBlend blend : {TileBlend::uniform, TileBlend::gaussian_weight}) {
        TileConfig tiles{16, 16, 8, blend};
        const Grid tiled =
            tiled_denoise(*pointwise, z, 10, std::nullopt, std::nullopt, tiles);
        CHECK(linf_diff(tiled, direct) <= 1e-9);
        // Concurrent tile evaluation is bitwise identical.
        const Grid tiled_mt =
            tiled_denoise(*pointwise, z, 10, std::nullopt, std::nullopt, tiles, 4);
        CHECK(linf_diff(tiled_mt, tiled) == 0.0);
    }
}

TEST_CASE("uniform blend of half-overlapping tiles preserves constants") {
    struct Identity final : Denoiser {
        Grid predict(const Grid& z, int, ConditionId,
                     std::optional<double>) const override {
            return z;
        }
        Stage stage() const override { return Stage::base; }
    } identity;
    Grid constant(1, 8, 16, 0.25);
    TileConfig tiles{8, 8, 4, TileBlend::uniform};
    const Grid out =
        tiled_denoise(identity, constant, 1, std::nullopt, std::nullopt, tiles);
    CHECK(linf_diff(out, constant) <= 1e-12);
}

TEST_CASE("tile config validation") {
    TileConfig bad{8, 8, 8, TileBlend::uniform};  // overlap == tile
    CHECK_THROWS_AS(validate_tiles(bad), std::invalid_argument);
    TileConfig neg{8, 8, -1, TileBlend::uniform};
    CHECK_THROWS_AS(validate_tiles(neg), std::invalid_argument);
}

TEST_CASE("with_guidance wraps plain models and forwards to distilled ones") {
    Rng rng(71);
    const Grid z = random_grid(1, 4, 4, rng);
    struct CondShift final : Denoiser {
        Grid predict(const Grid& zin, int, ConditionId cond,
                     std::optional<double> w) const override {
            Grid out = zin;
            if (cond.has_value())
                for (double& v : out.data) v += 1.0;
            if (w.has_value())
                for (double& v : out.data) v += 100.0;  // distilled path marker
            return out;
        }
        Stage stage() const override { return Stage::base; }
        bool consumes_guidance() const override { return consumes; }
        bool consumes = false;
    };

    auto plain = std::make_shared<CondShift>();
    DenoiserPtr wrapped = with_guidance(plain, 3.0);
    // D_u + 3 (D_c - D_u) = z + 3.
    const Grid out = wrapped->predict(z, 1, 0, std::nullopt);
    for (std::size_t i = 0; i < z.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(z.data[i] + 3.0).epsilon(1e-12));

    auto distilled = std::make_shared<CondShift>();
    distilled->consumes = true;
    DenoiserPtr fwd = with_guidance(distilled, 3.0);
    const Grid out2 = fwd->predict(z, 1, 0, std::nullopt);
    // Guidance forwarded into the model rather than extrapolated.
    for (std::size_t i = 0; i < z.data.size(); ++i)
        CHECK(out2.data[i] == doctest::Approx(z.data[i] + 101.0).epsilon(1e-12));
}

// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "relaydiff/denoiser.hpp"
#include "relaydiff/training.hpp"
#include "test_helpers.hpp"

using namespace relaydiff;
using relaydiff::testing::random_grid;
using relaydiff::testing::relative_error;

namespace {

std::vector<TrainItem> make_batch(int n, int c, int hw, Rng& rng, bool with_zL) {
    std::vector<TrainItem> batch;
    for (int i = 0; i < n; ++i) {
        TrainItem item;
        item.z0 = random_grid(c, hw, hw, rng);
        if (with_zL) item.zL = random_grid(c, hw, hw, rng);
        item.cond = i % 2;
        batch.push_back(std::move(item));
    }
    return batch;
}

struct ZeroDenoiser final : Denoiser {
    Grid predict(const Grid& z, int, ConditionId, std::optional<double>) const override {
        return Grid(z.channels, z.height, z.width, 0.0);
    }
    Stage stage() const override { return Stage::base; }
};

}  // namespace

TEST_CASE("base loss is zero for the exact predictor and E||z0||^2 for zero output") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    Rng rng(3);
    TrainItem item;
    item.z0 = random_grid(1, 4, 4, rng);
    std::vector<TrainItem> batch{item};

    DenoiserPtr oracle = oracle_fixed(item.z0);
    Rng lrng(5);
    CHECK(base_loss(*oracle, batch, sched, lrng) == 0.0);

    ZeroDenoiser zero;
    Rng lrng2(5);
    const double loss = base_loss(zero, batch, sched, lrng2);
    CHECK(loss == doctest::Approx(squared_norm(item.z0)).epsilon(1e-12));
}

TEST_CASE("relay loss requires zL and honors the endpoint identities") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    const RelayConfig relay = make_relay_config(sched, 50);
    Rng rng(7);

    std::vector<TrainItem> bad = make_batch(2, 1, 4, rng, false);
    ZeroDenoiser zero;
    Rng lrng(9);
    CHECK_THROWS_AS(relay_loss(zero, bad, sched, relay, lrng), std::invalid_argument);

    std::vector<TrainItem> batch = make_batch(3, 1, 4, rng, true);
    DenoiserPtr oracle = oracle_fixed(batch[0].z0);
    std::vector<TrainItem> single{batch[0]};
    Rng lrng2(11);
    CHECK(relay_loss(*oracle, single, sched, relay, lrng2) == 0.0);

    // t forced to 0: input is z0 itself (sigma_0 = 0, blur identity).
    Rng drng(13);
    const std::vector<NoiseDraw> d0 =
        make_relay_draws(single, sched, relay, drng, 0.0, 0);
    CHECK(d0[0].t == 0);
    // t forced to T_r: input is zL + sigma eps; zero predictor loses ||z0||^2.
    Rng drng2(17);
    std::vector<NoiseDraw> dTr =
        make_relay_draws(single, sched, relay, drng2, 0.0, relay.T_r);
    TinyNetConfig cfg;
    cfg.in_channels = 1;
    cfg.hidden_channels = 4;
    cfg.mid_layers = 0;
    cfg.time_steps = 100;
    TinyNet zero_net(cfg);  // zero params -> zero output
    const double loss = relay_loss_frozen(zero_net, single, sched, relay, dTr);
    CHECK(loss == doctest::Approx(squared_norm(single[0].z0)).epsilon(1e-12));
}

TEST_CASE("posterior-mean oracle beats perturbed oracles on the relay objective") {
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 100, 1.0);
    const RelayConfig relay = make_relay_config(sched, 50);
    const double mu = 0.1, var = 0.4, zL_val = 0.8;
    DenoiserPtr oracle = oracle_gaussian(Grid(1, 1, 1, mu), Grid(1, 1, 1, var),
                                         Stage::super_resolution, sched, relay,
                                         Grid(1, 1, 1, zL_val));
    struct Scaled final : Denoiser {
        DenoiserPtr inner;
        explicit Scaled(DenoiserPtr d) : inner(std::move(d)) {}
        Grid predict(const Grid& z, int t, ConditionId c,
                     std::optional<double> w) const override {
            Grid out = inner->predict(z, t, c, w);
            for (double& v : out.data) v = 1.25 * v + 0.1;
            return out;
        }
        Stage stage() const override { return inner->stage(); }
    } perturbed(oracle);

    Rng rng(21);
    std::vector<TrainItem> batch;
    for (int i = 0; i < 10000; ++i) {
        TrainItem item;
        item.z0 = Grid(1, 1, 1, mu + std::sqrt(var) * rng.normal());
        item.zL = Grid(1, 1, 1, zL_val);
        batch.push_back(std::move(item));
    }
    Rng a(33), b(33);
    CHECK(relay_loss(*oracle, batch, sched, relay, a) <
          relay_loss(perturbed, batch, sched, relay, b));
}

TEST_CASE("finite-difference gradients of both objectives on the tiny denoiser") {
    TinyNetConfig cfg;
    cfg.in_channels = 2;
    cfg.hidden_channels = 6;
    cfg.mid_layers = 1;
    cfg.num_classes = 2;
    cfg.time_steps = 40;
    Rng rng(23);
    TinyNet net = TinyNet::randomized(cfg, rng);

    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 40, 1.0);
    const RelayConfig relay = make_relay_config(sched, 20);
    std::vector<TrainItem> batch = make_batch(3, 2, 5, rng, true);

    Rng drng(29);
    const std::vector<NoiseDraw> bdraws = make_base_draws(batch, sched, drng, 0.1);
    const LossGrad base_lg = base_loss_grad(net, batch, sched, bdraws);
    const std::vector<NoiseDraw> rdraws =
        make_relay_draws(batch, sched, relay, drng, 0.1);
    const LossGrad relay_lg = relay_loss_grad(net, batch, sched, relay, rdraws);

    Rng pick(31);
    for (int i = 0; i < 10; ++i) {
        const std::size_t idx = pick.uniform_index(net.params().size());
        const double fd_base = relaydiff::testing::central_difference(
            net.params(), idx,
            [&] { return base_loss_frozen(net, batch, sched, bdraws); }, 1e-5);
        CHECK(relative_error(base_lg.grad[idx], fd_base) <= 1e-4);
        const double fd_relay = relaydiff::testing::central_difference(
            net.params(), idx,
            [&] { return relay_loss_frozen(net, batch, sched, relay, rdraws); },
            1e-5);
        CHECK(relative_error(relay_lg.grad[idx], fd_relay) <= 1e-4);
    }
}

TEST_CASE("batch-parallel loss gradients are bitwise identical to serial") {
    TinyNetConfig cfg;
    cfg.in_channels = 1;
    cfg.hidden_channels = 6;
    cfg.mid_layers = 1;
    cfg.time_steps = 30;
    Rng rng(41);
    TinyNet net = TinyNet::randomized(cfg, rng);
    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 30, 1.0);
    std::vector<TrainItem> batch = make_batch(8, 1, 6, rng, false);
    Rng drng(43);
    const std::vector<NoiseDraw> draws = make_base_draws(batch, sched, drng);

    const LossGrad serial = base_loss_grad(net, batch, sched, draws, 1);
    const LossGrad parallel = base_loss_grad(net, batch, sched, draws, 4);
    CHECK(serial.loss == parallel.loss);
    for (std::size_t i = 0; i < serial.grad.size(); ++i)
        CHECK(serial.grad[i] == parallel.grad[i]);
}

TEST_CASE("train loop: zero learning rate leaves parameters unchanged") {
    TinyNetConfig cfg;
    cfg.in_channels = 1;
    cfg.hidden_channels = 4;
    cfg.mid_layers = 0;
    cfg.time_steps = 20;
    Rng rng(51);
    TinyNet net = TinyNet::randomized(cfg, rng);
    const std::vector<double> before = net.params();

    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 20, 1.0);
    std::vector<TrainItem> data = make_batch(8, 1, 4, rng, false);
    OptimizerConfig opt;
    opt.lr = 0.0;
    opt.epochs = 2;
    opt.batch_size = 4;
    opt.seed = 5;
    train_loop(make_base_loss_fn(net, sched, 0.0, 1), net.params(), data, opt);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(net.params()[i] == before[i]);
}

TEST_CASE("train loop reduces the loss on a fixed-seed toy run") {
    TinyNetConfig cfg;
    cfg.in_channels = 1;
    cfg.hidden_channels = 8;
    cfg.mid_layers = 1;
    cfg.time_steps = 20;
    Rng rng(61);
    TinyNet net = TinyNet::randomized(cfg, rng);

    const NoiseSchedule sched = make_noise_schedule(ScheduleRule::linear, 20, 1.0);
    std::vector<TrainItem> data = make_batch(32, 1, 8, rng, false);
    OptimizerConfig opt;
    opt.lr = 2e-3;
    opt.epochs = 10;
    opt.batch_size = 8;
    opt.seed = 7;
    opt.metrics_csv = "test_train_metrics.csv";
    const TrainMetrics metrics =
        train_loop(make_base_loss_fn(net, sched, 0.0, 1), net.params(), data, opt);

    REQUIRE(metrics.epoch_loss.size() == 10);
    int increases = 0;
    for (std::size_t e = 1; e < metrics.epoch_loss.size(); ++e)
        if (metrics.epoch_loss[e] > metrics.epoch_loss[e - 1]) ++increases;
    CHECK(increases <= 2);  // <= 20% non-monotone epochs
    CHECK(metrics.epoch_loss.back() < metrics.epoch_loss.front());

    // CSV exists with one row per epoch plus header.
    std::ifstream csv("test_train_metrics.csv");
    REQUIRE(csv.good());
    std::string line;
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 11);
    csv.close();
    std::remove("test_train_metrics.csv");
}

TEST_CASE("train loop aborts on divergence and checkpoints the last finite state") {
    std::vector<double> params = {1.0, 2.0};
    std::vector<TrainItem> data(4);
    for (auto& item : data) item.z0 = Grid(1, 1, 1, 0.0);

    bool checkpointed = false;
    std::vector<double> saved;
    OptimizerConfig opt;
    opt.lr = 0.1;
    opt.epochs = 3;
    opt.batch_size = 2;
    opt.on_divergence_checkpoint = [&](const std::vector<double>& p) {
        checkpointed = true;
        saved = p;
    };
    int calls = 0;
    LossFn exploding = [&](const std::vector<double>& p, std::span<const TrainItem>,
                           Rng&) {
        LossGrad lg;
        lg.grad.assign(p.size(), 0.5);
        lg.loss = ++calls >= 3 ? std::nan("") : 1.0;
        return lg;
    };
    CHECK_THROWS_AS(train_loop(exploding, params, data, opt), std::runtime_error);
    CHECK(checkpointed);
    CHECK(saved.size() == 2);
}

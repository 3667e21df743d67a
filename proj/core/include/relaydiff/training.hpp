// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relaydiff/denoiser.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/rng.hpp"
#include "relaydiff/schedule.hpp"
#include "relaydiff/tiny_denoiser.hpp"

namespace relaydiff {

/// One training example. SR items carry the low-res-derived latent partner
/// (downsample in pixel space, bilinearly upsample back, encode).
struct TrainItem {
    Grid z0;
    std::optional<Grid> zL;
    ConditionId cond;
};

/// Per-item randomness of one loss evaluation, drawn up front so the loss is
/// a deterministic function of the parameters (needed for finite-difference
/// checks and reproducible training).
struct NoiseDraw {
    int t = 0;
    Grid eps;
    bool keep_cond = true;
};

std::vector<NoiseDraw> make_base_draws(std::span<const TrainItem> batch,
                                       const NoiseSchedule& sched, Rng& rng,
                                       double cond_dropout = 0.0,
                                       std::optional<int> force_t = std::nullopt);

/// t is drawn uniformly from {0..T_r} (the blur identity at t = 0 makes that
/// endpoint a plain autoencoding term).
std::vector<NoiseDraw> make_relay_draws(std::span<const TrainItem> batch,
                                        const NoiseSchedule& sched,
                                        const RelayConfig& relay, Rng& rng,
                                        double cond_dropout = 0.0,
                                        std::optional<int> force_t = std::nullopt);

/// Monte Carlo x0-prediction loss: mean over the batch of the squared norm
/// ||D(z0 + sigma_t eps, t, c) - z0||^2 with t ~ U{1..T}.
double base_loss(const Denoiser& denoiser, std::span<const TrainItem> batch,
                 const NoiseSchedule& sched, Rng& rng);

/// Same objective for the relaying stage: inputs z0^t + sigma_t eps, target
/// z0, t ~ U{0..T_r}. Throws if any item lacks its zL partner.
double relay_loss(const Denoiser& denoiser, std::span<const TrainItem> batch,
                  const NoiseSchedule& sched, const RelayConfig& relay,
                  Rng& rng);

// Deterministic loss given frozen draws (evaluation path shared with the
// gradient path so finite differences check the same function).
double base_loss_frozen(const TinyNet& net, std::span<const TrainItem> batch,
                        const NoiseSchedule& sched,
                        std::span<const NoiseDraw> draws);
double relay_loss_frozen(const TinyNet& net, std::span<const TrainItem> batch,
                         const NoiseSchedule& sched, const RelayConfig& relay,
                         std::span<const NoiseDraw> draws);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

LossGrad base_loss_grad(const TinyNet& net, std::span<const TrainItem> batch,
                        const NoiseSchedule& sched,
                        std::span<const NoiseDraw> draws, int workers = 1);
LossGrad relay_loss_grad(const TinyNet& net, std::span<const TrainItem> batch,
                         const NoiseSchedule& sched, const RelayConfig& relay,
                         std::span<const NoiseDraw> draws, int workers = 1);

struct OptimizerConfig {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 10;
    int batch_size = 8;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string metrics_csv;  // optional "epoch,loss,wall_time" log
    /// Called with the last finite parameters if the loss diverges.
    std::function<void(const std::vector<double>&)> on_divergence_checkpoint;
};

struct TrainMetrics {
    std::vector<double> epoch_loss;
    double wall_time_s = 0.0;
};

using LossFn = std::function<LossGrad(const std::vector<double>& params,
                                      std::span<const TrainItem> batch, Rng& rng)>;

/// Seeded mini-batch Adam over the dataset. Aborts on non-finite loss after
/// checkpointing the last finite parameter state.
TrainMetrics train_loop(const LossFn& loss_fn, std::vector<double>& params,
                        const std::vector<TrainItem>& dataset,
                        const OptimizerConfig& opt);

// Standard loss closures over a live net. The net's parameters are kept in
// sync with the vector train_loop optimizes.
LossFn make_base_loss_fn(TinyNet& net, const NoiseSchedule& sched,
                         double cond_dropout, int workers);
LossFn make_relay_loss_fn(TinyNet& net, const NoiseSchedule& sched,
                          const RelayConfig& relay, double cond_dropout,
                          int workers);

/// Adam state for callers that manage their own iteration loop.
class Adam {
public:
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);
    void step(std::vector<double>& params, const std::vector<double>& grad);

private:
    double lr_, beta1_, beta2_, eps_;
    long step_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace relaydiff

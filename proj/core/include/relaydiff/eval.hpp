// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaydiff/codec.hpp"
#include "relaydiff/dataset.hpp"
#include "relaydiff/denoiser.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/sampler.hpp"
#include "relaydiff/schedule.hpp"
#include "relaydiff/tiling.hpp"

namespace relaydiff {

/// Numerical version of the sampler-consistency induction: with the
/// fixed-target oracle and delta == 0, every visited state must satisfy
/// z_t = z0^t + sigma_t * eps for the initial eps, ending at z0.
struct TrajectoryReport {
    int trials = 0;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Throws std::domain_error for nonzero delta profiles (the identity only
/// holds for the deterministic sampler).
TrajectoryReport verify_oracle_trajectory(const NoiseSchedule& sched,
                                          const RelayConfig& relay, int trials,
                                          std::uint64_t seed,
                                          double tolerance = 1e-9);

/// Monte Carlo check of the per-step marginals N(z0^t, sigma_t^2) for scalar
/// latents when the transition kernel is fed the exact z0 (the point-prior
/// limit of the Gaussian-data oracle). Means are tested at 3 standard errors,
/// variances against the 99% chi-square band.
struct MomentReport {
    int samples = 0;
    int steps_checked = 0;
    double worst_mean_dev_se = 0.0;   // max |mean - z0^t| / SE
    double worst_var_stat_lo = 1e300; // min/max of (n-1) s^2 / sigma_t^2
    double worst_var_stat_hi = 0.0;
    double chi2_lo = 0.0;
    double chi2_hi = 0.0;
    bool mean_pass = false;
    bool var_pass = false;
    bool pass = false;
};

MomentReport marginal_moment_test(const NoiseSchedule& sched,
                                  const RelayConfig& relay, double z0, double zL,
                                  int n_samples, std::uint64_t seed);

struct PairMetric {
    double mse = 0.0;
    double psnr = 0.0;  // dB, capped at 99
};

struct QualityReport {
    std::vector<PairMetric> pairs;
    double mean_mse = 0.0;
    double stderr_mse = 0.0;
    double mean_psnr = 0.0;
};

/// Per-pair MSE/PSNR of paired outputs vs ground truth. Throws on unpaired
/// inputs.
QualityReport sr_quality_report(const std::vector<Grid>& outputs,
                                const std::vector<Grid>& truths);

/// Shared SR evaluation protocol: the held-out item's true low-res image
/// (optionally perturbed to mimic base-stage artifacts) is bilinearly
/// upsampled, encoded, and run through the relay sampler; both the relay
/// output and the plain upsampled baseline are scored against the high-res
/// ground truth in pixel space.
struct SrEvalConfig {
    int sr_steps = 10;
    double w = 1.0;
    std::uint64_t seed = 0;
    double corruption_amp = 0.0;
    std::optional<TileConfig> tile;
    int workers = 1;
};

struct SrEvalResult {
    QualityReport relay;
    QualityReport baseline;
    double mse_ratio = 0.0;  // relay mean MSE / baseline mean MSE
    std::vector<Grid> outputs;
    std::vector<Grid> baselines;
};

SrEvalResult evaluate_sr(DenoiserPtr sr_denoiser,
                         const std::vector<ToyItem>& heldout,
                         const NoiseSchedule& sched, const RelayConfig& relay,
                         const Codec& codec, const SrEvalConfig& cfg);

/// Relay starting-point sweep: trains one SR denoiser per T_r fraction with
/// an identical budget and scores each with evaluate_sr on perturbed inputs.
struct AblateConfig {
    std::vector<double> fractions = {0.2, 0.4, 0.5, 0.6, 0.8};
    int epochs = 12;
    int batch_size = 8;
    double lr = 3e-3;
    int hidden_channels = 16;
    int mid_layers = 2;
    double cond_dropout = 0.1;
    std::uint64_t seed = 0;
    int workers = 1;
    SrEvalConfig eval;
};

struct AblateRow {
    double fraction = 0.0;
    int T_r = 0;
    double relay_mse = 0.0;
    double baseline_mse = 0.0;
};

std::vector<AblateRow> ablate_start(const std::vector<ToyItem>& train_items,
                                    const std::vector<ToyItem>& heldout,
                                    const NoiseSchedule& sched,
                                    const Codec& codec, const AblateConfig& cfg);

// Report files carry the seed and config hash on a leading comment line.
void write_quality_csv(const std::string& path, const QualityReport& relay,
                       const QualityReport* baseline, std::uint64_t seed,
                       const std::string& config_hash);
void write_ablate_csv(const std::string& path, const std::vector<AblateRow>& rows,
                      std::uint64_t seed, const std::string& config_hash);

}  // namespace relaydiff

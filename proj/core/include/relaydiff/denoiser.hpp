// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>

#include "relaydiff/grid.hpp"
#include "relaydiff/schedule.hpp"

namespace relaydiff {

enum class Stage { base, super_resolution };

/// Condition id: class index in [0, num_classes); nullopt = unconditional.
using ConditionId = std::optional<int>;

/// Predicts the clean latent z0 from a noised state. Implementations must be
/// safe to call concurrently; output shape equals input shape.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual Grid predict(const Grid& z_t, int t, ConditionId cond,
                         std::optional<double> w) const = 0;
    virtual Stage stage() const = 0;

    /// True if the model conditions on the guidance strength directly
    /// (distilled models); such models are not wrapped for guidance.
    virtual bool consumes_guidance() const { return false; }
};

using DenoiserPtr = std::shared_ptr<const Denoiser>;

/// Oracle that ignores its input and always returns the given target.
DenoiserPtr oracle_fixed(Grid z0, Stage stage = Stage::super_resolution);

/// Posterior-mean oracle for Gaussian data z0 ~ N(mu, diag(var)).
///
/// base: observation z_t = z0 + sigma_t eps, prediction
///       (var z_t + sigma_t^2 mu) / (var + sigma_t^2).
/// super_resolution: observation z_t = alpha_t z0 + beta_t zL + sigma_t eps
///       with alpha_t = (T_r - t)/T_r, beta_t = t/T_r; the known zL is held by
///       the oracle. Prediction (sigma_t^2 mu + alpha_t var (z_t - beta_t zL))
///       / (sigma_t^2 + alpha_t^2 var).
///
/// mu / var / zL may be 1x1x1 grids, in which case they broadcast over any
/// input shape (this also makes the oracle a 1x1-receptive-field denoiser).
DenoiserPtr oracle_gaussian(Grid mu, Grid var, Stage stage,
                            const NoiseSchedule& sched, const RelayConfig& relay,
                            Grid zL_known = Grid(1, 1, 1, 0.0));

/// Classifier-free guidance combination: D_u + w (D_c - D_u).
/// cond == nullopt degenerates to a single unconditional call.
Grid cfg_denoise(const Denoiser& denoiser, const Grid& z, int t,
                 ConditionId cond, double w);

/// Wraps a denoiser for sampling at guidance strength w. If the inner model
/// consumes guidance directly, w is forwarded instead of extrapolating.
DenoiserPtr with_guidance(DenoiserPtr inner, double w);

}  // namespace relaydiff

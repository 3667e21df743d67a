// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "relaydiff/denoiser.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/rng.hpp"
#include "relaydiff/schedule.hpp"

namespace relaydiff {

/// Coefficients of one relay update z_{t-1} = a z_t + b z0 + c z0^t (+ delta
/// noise). With delta = 0, a = sigma_{t-1}/sigma_t.
struct RelayCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double delta = 0.0;
};

/// Single-step coefficients: a = sqrt(sigma_{t-1}^2 - delta_t^2)/sigma_t,
/// b = 1/t, c = (t-1)/t - a.
RelayCoefficients relay_coefficients(int t, const NoiseSchedule& sched,
                                     const RelayConfig& relay);

/// Strided-jump generalization t -> s (0 <= s < t): a = sqrt(sigma_s^2 -
/// delta^2)/sigma_t, b = (t-s)/t, c = s/t - a. At s = t-1 this reduces to
/// relay_coefficients; it is also the merged update distilled students take.
RelayCoefficients relay_jump_coefficients(int t_from, int t_to, double delta,
                                          const NoiseSchedule& sched);

/// Descending timestep grid for reduced-step sampling: `steps` evenly spaced
/// nodes from t_start down to 1, then a final 0. steps equals the number of
/// denoiser evaluations. steps = full (t_start) reproduces the unit-stride
/// schedule.
std::vector<int> make_step_grid(int t_start, int steps);

/// Called after each update with the node reached, the state, and the blur
/// anchor at that node. Also called once with the start state.
using StepObserver = std::function<void(int t, const Grid& state, const Grid& anchor)>;

struct RelaySampleOptions {
    int steps = -1;  // <= 0: full T_r unit-stride schedule
    std::optional<double> w;
    StepObserver observer;
};

/// Latent relay sampler. Starts from z_{T_r} = zL + sigma_{T_r} eps and walks
/// the blur/denoise recurrence down to t = 0; returns the z0 estimate.
/// zL_latent is the encoded bilinearly-upsampled previous-stage output.
Grid relay_sample(const Grid& zL_latent, const Denoiser& denoiser,
                  ConditionId cond, const NoiseSchedule& sched,
                  const RelayConfig& relay, Rng& rng,
                  const RelaySampleOptions& opts = {});

struct BaseSampleOptions {
    std::optional<double> w;
    StepObserver observer;
};

/// Deterministic z0-prediction sampler for the base stage. `noise` is the
/// start state at t = T (~ N(0, sigma_T^2 I)); the update is
/// z_s = z0_hat + (sigma_s/sigma_t)(z_t - z0_hat) over the strided grid.
Grid base_sample(const Grid& noise, const Denoiser& denoiser, ConditionId cond,
                 const NoiseSchedule& sched, int steps,
                 const BaseSampleOptions& opts = {});

}  // namespace relaydiff

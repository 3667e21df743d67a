// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relaydiff/denoiser.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/sampler.hpp"
#include "relaydiff/schedule.hpp"
#include "relaydiff/tiny_denoiser.hpp"
#include "relaydiff/training.hpp"

namespace relaydiff {

/// Two consecutive deterministic teacher relay steps t -> t-1 -> t-2 from
/// state z_t with blur anchor z0^t; returns z_{t-2}. The intermediate anchor
/// follows the transition-line recurrence with the teacher's prediction.
/// Requires t >= 2.
Grid distill_pair_target(const Denoiser& teacher, const Grid& z_t,
                         const Grid& anchor_t, int t, ConditionId cond,
                         std::optional<double> w, const NoiseSchedule& sched,
                         const RelayConfig& relay);

/// Strided variant over explicit grid nodes t_hi > t_mid > t_lo >= 0.
Grid distill_pair_target_nodes(const Denoiser& teacher, const Grid& z_t,
                               const Grid& anchor_t, int t_hi, int t_mid,
                               int t_lo, ConditionId cond,
                               std::optional<double> w,
                               const NoiseSchedule& sched);

/// One student step covering two teacher steps: with prediction z0_hat,
///   z_{t-2} = (sigma_{t-2}/sigma_t) z_t + (2/t) z0_hat
///             + ((t-2)/t - sigma_{t-2}/sigma_t) z0^t.
/// The coefficients sum to one and reproduce the composed teacher update
/// exactly when z0_hat equals the true z0. Requires t >= 2.
Grid student_step(const Denoiser& student, const Grid& z_t, const Grid& anchor_t,
                  int t, ConditionId cond, std::optional<double> w,
                  const NoiseSchedule& sched, const RelayConfig& relay);

/// Pure algebra of the merged jump t_hi -> t_lo given a prediction.
Grid student_step_update(const Grid& z_t, const Grid& anchor_t,
                         const Grid& z0_pred, int t_hi, int t_lo,
                         const NoiseSchedule& sched);

// Base-stage analogues (plain x0-prediction sampler update, no blur anchor).
Grid distill_pair_target_base_nodes(const Denoiser& teacher, const Grid& z_t,
                                    int t_hi, int t_mid, int t_lo,
                                    ConditionId cond, std::optional<double> w,
                                    const NoiseSchedule& sched);
Grid student_step_update_base(const Grid& z_t, const Grid& z0_pred, int t_hi,
                              int t_lo, const NoiseSchedule& sched);

struct DistillConfig {
    Stage stage = Stage::super_resolution;
    int initial_steps = 8;  // teacher sampling steps entering round 1
    int rounds = 2;         // each round halves the step count
    double w_min = 1.0;     // guidance strengths sampled during training
    double w_max = 10.0;
    int iters_per_round = 400;
    int batch_size = 8;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int workers = 1;
    double teacher_guidance = 7.5;  // unused once w is sampled; kept for logs
    std::string metrics_csv;
};

struct DistillResult {
    TinyNet student;
    std::vector<double> round_final_loss;
    std::vector<int> step_schedule;  // steps after each round
};

/// Progressive step-halving distillation. Round 1 wraps the teacher with
/// classifier-free guidance at a sampled strength w and trains the student's
/// w-embedding pathway; later rounds condition on w directly. The returned
/// student has w_conditioned set and samples with initial_steps / 2^rounds
/// steps.
DistillResult progressive_distill(const TinyNet& teacher,
                                  const std::vector<TrainItem>& data,
                                  const NoiseSchedule& sched,
                                  const RelayConfig& relay,
                                  const DistillConfig& cfg);

}  // namespace relaydiff

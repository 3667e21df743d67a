// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "relaydiff/grid.hpp"

namespace relaydiff {

enum class ScheduleRule { linear, cosine };

ScheduleRule schedule_rule_from_string(const std::string& s);
std::string to_string(ScheduleRule rule);

/// Discretized noise scale sigma_t over t in {0..T}. sigma[0] == 0 exactly and
/// sigma is strictly increasing for t >= 1. Immutable after construction.
struct NoiseSchedule {
    int T = 0;
    ScheduleRule rule = ScheduleRule::linear;
    double sigma_max = 1.0;
    std::vector<double> sigma;  // size T + 1

    double at(int t) const;
};

/// Builds a schedule. linear: sigma_t = sigma_max * t / T.
/// cosine: sigma_t = sigma_max * (1 - cos(pi/2 * t / T)).
NoiseSchedule make_noise_schedule(ScheduleRule rule, int T, double sigma_max);

/// Per-step stochasticity for the relay sampler. delta[t] is the noise scale
/// injected when stepping away from t; delta[t] <= sigma_{t-1} must hold.
struct DeltaProfile {
    enum class Kind { zero, sigma_prev_scale };
    Kind kind = Kind::zero;
    double scale = 0.0;  // fraction of sigma_{t-1} for sigma_prev_scale
};

/// Relay start point and stochasticity profile. delta has size T_r + 1 with
/// delta[0] unused; the default profile is identically zero (ODE sampler).
struct RelayConfig {
    int T_r = 0;
    std::vector<double> delta;

    double delta_at(int t) const;
};

RelayConfig make_relay_config(const NoiseSchedule& sched, int T_r,
                              const DeltaProfile& profile = {});

/// Throws if the relay config is inconsistent with the schedule
/// (T_r out of range, delta_t > sigma_{t-1}, or wrong delta length).
void validate_relay(const NoiseSchedule& sched, const RelayConfig& relay);

/// Linear blurring transition: ((T_r - t)/T_r) z0 + (t/T_r) zL.
/// t = 0 returns z0 exactly; t = T_r returns zL exactly.
Grid blur_transition(const Grid& z0, const Grid& zL, int t, int T_r);

/// z0 + sigma_t * eps.
Grid forward_base_sample(const Grid& z0, int t, const Grid& eps,
                         const NoiseSchedule& sched);

/// blur_transition(z0, zL, t, T_r) + sigma_t * eps.
Grid forward_relay_sample(const Grid& z0, const Grid& zL, int t,
                          const Grid& eps, const NoiseSchedule& sched,
                          const RelayConfig& relay);

}  // namespace relaydiff

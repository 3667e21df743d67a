// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace relaydiff {

ScheduleRule schedule_rule_from_string(const std::string& s) {
    if (s == "linear") return ScheduleRule::linear;
    if (s == "cosine") return ScheduleRule::cosine;
    throw std::invalid_argument("unknown schedule rule: " + s);
}

std::string to_string(ScheduleRule rule) {
    return rule == ScheduleRule::linear ? "linear" : "cosine";
}

double NoiseSchedule::at(int t) const {
    if (t < 0 || t > T) {
        throw std::out_of_range("schedule step " + std::to_string(t) +
                                " outside [0, " + std::to_string(T) + "]");
    }
    return sigma[static_cast<std::size_t>(t)];
}

NoiseSchedule make_noise_schedule(ScheduleRule rule, int T, double sigma_max) {
    if (T < 1) throw std::invalid_argument("schedule needs T >= 1");
    if (!(sigma_max > 0.0))
        throw std::invalid_argument("schedule needs sigma_max > 0");

    NoiseSchedule s;
    s.T = T;
    s.rule = rule;
    s.sigma_max = sigma_max;
    s.sigma.resize(static_cast<std::size_t>(T) + 1);
    s.sigma[0] = 0.0;
    constexpr double half_pi = 1.5707963267948966192313216916398;
    for (int t = 1; t <= T; ++t) {
        const double frac = static_cast<double>(t) / T;
        switch (rule) {
            case ScheduleRule::linear:
                s.sigma[t] = sigma_max * frac;
                break;
            case ScheduleRule::cosine:
                s.sigma[t] = sigma_max * (1.0 - std::cos(half_pi * frac));
                break;
        }
    }
    return s;
}

double RelayConfig::delta_at(int t) const {
    if (t < 1 || t > T_r) {
        throw std::out_of_range("relay delta step " + std::to_string(t) +
                                " outside [1, " + std::to_string(T_r) + "]");
    }
    return delta[static_cast<std::size_t>(t)];
}

RelayConfig make_relay_config(const NoiseSchedule& sched, int T_r,
                              const DeltaProfile& profile) {
    if (T_r < 1 || T_r > sched.T) {
        throw std::invalid_argument("relay start T_r=" + std::to_string(T_r) +
                                    " outside (0, T=" + std::to_string(sched.T) +
                                    "]");
    }
    RelayConfig r;
    r.T_r = T_r;
    r.delta.assign(static_cast<std::size_t>(T_r) + 1, 0.0);
    if (profile.kind == DeltaProfile::Kind::sigma_prev_scale) {
        if (profile.scale < 0.0 || profile.scale > 1.0) {
            throw std::invalid_argument("delta scale must be in [0, 1]");
        }
        for (int t = 1; t <= T_r; ++t) {
            r.delta[t] = profile.scale * sched.at(t - 1);
        }
    }
    validate_relay(sched, r);
    return r;
}

void validate_relay(const NoiseSchedule& sched, const RelayConfig& relay) {
    if (relay.T_r < 1 || relay.T_r > sched.T) {
        throw std::invalid_argument("relay start T_r out of range");
    }
    if (relay.delta.size() != static_cast<std::size_t>(relay.T_r) + 1) {
        throw std::invalid_argument("relay delta array must have T_r + 1 entries");
    }
    for (int t = 1; t <= relay.T_r; ++t) {
        const double d = relay.delta[t];
        if (d < 0.0 || d > sched.at(t - 1)) {
            throw std::domain_error("delta_" + std::to_string(t) +
                                    " violates 0 <= delta_t <= sigma_{t-1}");
        }
    }
}

Grid blur_transition(const Grid& z0, const Grid& zL, int t, int T_r) {
    require_same_shape(z0, zL, "blur_transition");
    if (T_r < 1) throw std::out_of_range("blur_transition needs T_r >= 1");
    if (t < 0 || t > T_r) {
        throw std::out_of_range("blur step t=" + std::to_string(t) +
                                " outside [0, T_r=" + std::to_string(T_r) + "]");
    }
    if (t == 0) return z0;
    if (t == T_r) return zL;
    const double w = static_cast<double>(t) / T_r;
    return lerp2(1.0 - w, z0, w, zL);
}

Grid forward_base_sample(const Grid& z0, int t, const Grid& eps,
                         const NoiseSchedule& sched) {
    require_same_shape(z0, eps, "forward_base_sample");
    return axpy(z0, sched.at(t), eps);
}

Grid forward_relay_sample(const Grid& z0, const Grid& zL, int t,
                          const Grid& eps, const NoiseSchedule& sched,
                          const RelayConfig& relay) {
    require_same_shape(z0, eps, "forward_relay_sample");
    if (t < 0 || t > relay.T_r) {
        throw std::out_of_range("relay forward step t=" + std::to_string(t) +
                                " outside [0, T_r]");
    }
    Grid blurred = blur_transition(z0, zL, t, relay.T_r);
    return axpy(blurred, sched.at(t), eps);
}

}  // namespace relaydiff

// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace relaydiff {

RelayCoefficients relay_jump_coefficients(int t_from, int t_to, double delta,
                                          const NoiseSchedule& sched) {
    if (t_from < 1 || t_from > sched.T)
        throw std::out_of_range("relay jump source step out of range");
    if (t_to < 0 || t_to >= t_from)
        throw std::out_of_range("relay jump target must satisfy 0 <= s < t");
    const double sigma_t = sched.at(t_from);
    const double sigma_s = sched.at(t_to);
    if (delta < 0.0 || delta > sigma_s)
        throw std::domain_error("delta must satisfy 0 <= delta <= sigma_target");
    RelayCoefficients k;
    k.delta = delta;
    k.a = std::sqrt(sigma_s * sigma_s - delta * delta) / sigma_t;
    k.b = static_cast<double>(t_from - t_to) / t_from;
    k.c = static_cast<double>(t_to) / t_from - k.a;
    return k;
}

RelayCoefficients relay_coefficients(int t, const NoiseSchedule& sched,
                                     const RelayConfig& relay) {
    if (t < 1 || t > relay.T_r)
        throw std::out_of_range("relay step t=" + std::to_string(t) +
                                " outside [1, T_r]");
    return relay_jump_coefficients(t, t - 1, relay.delta_at(t), sched);
}

std::vector<int> make_step_grid(int t_start, int steps) {
    if (t_start < 1) throw std::out_of_range("step grid needs t_start >= 1");
    if (steps < 1) throw std::out_of_range("step grid needs steps >= 1");
    if (steps > t_start)
        throw std::out_of_range("steps=" + std::to_string(steps) +
                                " exceeds schedule range t_start=" +
                                std::to_string(t_start));
    std::vector<int> nodes;
    nodes.reserve(static_cast<std::size_t>(steps) + 1);
    if (steps == 1) {
        nodes.push_back(t_start);
    } else {
        // Evenly spaced from t_start down to 1, both included.
        const double span = static_cast<double>(t_start - 1);
        for (int i = 0; i < steps; ++i) {
            const int t = t_start - static_cast<int>(
                                        std::llround(span * i / (steps - 1)));
            if (nodes.empty() || t < nodes.back()) nodes.push_back(t);
        }
    }
    nodes.push_back(0);
    return nodes;
}

namespace {

void check_prediction(const Grid& pred, const Grid& state, int t) {
    require_same_shape(pred, state, "denoiser output");
    if (!all_finite(pred))
        throw std::runtime_error("non-finite denoiser output at step t=" +
                                 std::to_string(t));
}

}  // namespace

Grid relay_sample(const Grid& zL_latent, const Denoiser& denoiser,
                  ConditionId cond, const NoiseSchedule& sched,
                  const RelayConfig& relay, Rng& rng,
                  const RelaySampleOptions& opts) {
    // Degenerate truncation: no relay steps, input passes through.
    if (relay.T_r == 0) return zL_latent;
    validate_relay(sched, relay);

    const int steps = opts.steps <= 0 || opts.steps > relay.T_r ? relay.T_r
                                                                : opts.steps;
    const std::vector<int> nodes = make_step_grid(relay.T_r, steps);

    const double sigma_start = sched.at(relay.T_r);
    Grid state = zL_latent;
    for (double& v : state.data) v += sigma_start * rng.normal();
    Grid anchor = zL_latent;  // z0^{T_r} = zL by construction
    if (opts.observer) opts.observer(relay.T_r, state, anchor);

    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const int t = nodes[i];
        const int s = nodes[i + 1];
        Grid pred = denoiser.predict(state, t, cond, opts.w);
        check_prediction(pred, state, t);

        const double delta = relay.delta_at(t);
        const RelayCoefficients k = relay_jump_coefficients(t, s, delta, sched);
        Grid next = lerp3(k.a, state, k.b, pred, k.c, anchor);
        if (delta > 0.0) {
            for (double& v : next.data) v += delta * rng.normal();
        }
        // Blur anchor moves toward the prediction along the transition line.
        const double frac = static_cast<double>(t - s) / t;
        for (std::size_t j = 0; j < anchor.data.size(); ++j)
            anchor.data[j] += (pred.data[j] - anchor.data[j]) * frac;

        state = std::move(next);
        if (opts.observer) opts.observer(s, state, anchor);
    }
    return state;
}

Grid base_sample(const Grid& noise, const Denoiser& denoiser, ConditionId cond,
                 const NoiseSchedule& sched, int steps,
                 const BaseSampleOptions& opts) {
    if (steps < 1 || steps > sched.T)
        throw std::out_of_range("base sampler steps outside [1, T]");
    const std::vector<int> nodes = make_step_grid(sched.T, steps);

    Grid state = noise;
    if (opts.observer) opts.observer(sched.T, state, state);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const int t = nodes[i];
        const int s = nodes[i + 1];
        Grid pred = denoiser.predict(state, t, cond, opts.w);
        check_prediction(pred, state, t);
        const double ratio = sched.at(s) / sched.at(t);
        // z_s = pred + ratio (z_t - pred)
        Grid next = lerp2(ratio, state, 1.0 - ratio, pred);
        state = std::move(next);
        if (opts.observer) opts.observer(s, state, state);
    }
    return state;
}

}  // namespace relaydiff

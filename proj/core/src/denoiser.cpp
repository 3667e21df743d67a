// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/denoiser.hpp"

#include <stdexcept>
#include <utility>

namespace relaydiff {

namespace {

class FixedOracle final : public Denoiser {
public:
    FixedOracle(Grid z0, Stage stage) : z0_(std::move(z0)), stage_(stage) {}

    Grid predict(const Grid& z_t, int, ConditionId, std::optional<double>) const override {
        require_same_shape(z_t, z0_, "fixed oracle");
        return z0_;
    }
    Stage stage() const override { return stage_; }

private:
    Grid z0_;
    Stage stage_;
};

// Fetch a possibly-broadcast (1x1x1) value.
inline double bval(const Grid& g, std::size_t i) {
    return g.data.size() == 1 ? g.data[0] : g.data[i];
}

class GaussianOracle final : public Denoiser {
public:
    GaussianOracle(Grid mu, Grid var, Stage stage, const NoiseSchedule& sched,
                   const RelayConfig& relay, Grid zL)
        : mu_(std::move(mu)),
          var_(std::move(var)),
          zL_(std::move(zL)),
          stage_(stage),
          sched_(sched),
          T_r_(relay.T_r) {
        for (double v : var_.data) {
            if (!(v > 0.0))
                throw std::domain_error("gaussian oracle needs var > 0 (degenerate prior)");
        }
        if (!mu_.same_shape(var_) && var_.data.size() != 1 && mu_.data.size() != 1)
            throw std::invalid_argument("gaussian oracle: mu/var shape mismatch");
    }

    Grid predict(const Grid& z_t, int t, ConditionId, std::optional<double>) const override {
        const double sigma = sched_.at(t);
        const double s2 = sigma * sigma;
        Grid out(z_t.channels, z_t.height, z_t.width);
        if (stage_ == Stage::base) {
            for (std::size_t i = 0; i < z_t.data.size(); ++i) {
                const double v = bval(var_, i);
                out.data[i] = (v * z_t.data[i] + s2 * bval(mu_, i)) / (v + s2);
            }
        } else {
            if (t > T_r_)
                throw std::out_of_range("gaussian SR oracle queried past T_r");
            const double alpha = static_cast<double>(T_r_ - t) / T_r_;
            const double beta = static_cast<double>(t) / T_r_;
            for (std::size_t i = 0; i < z_t.data.size(); ++i) {
                const double v = bval(var_, i);
                const double y = z_t.data[i] - beta * bval(zL_, i);
                out.data[i] =
                    (s2 * bval(mu_, i) + alpha * v * y) / (s2 + alpha * alpha * v);
            }
        }
        return out;
    }
    Stage stage() const override { return stage_; }

private:
    Grid mu_;
    Grid var_;
    Grid zL_;
    Stage stage_;
    NoiseSchedule sched_;
    int T_r_;
};

class GuidedDenoiser final : public Denoiser {
public:
    GuidedDenoiser(DenoiserPtr inner, double w) : inner_(std::move(inner)), w_(w) {}

    Grid predict(const Grid& z_t, int t, ConditionId cond,
                 std::optional<double>) const override {
        if (inner_->consumes_guidance()) return inner_->predict(z_t, t, cond, w_);
        return cfg_denoise(*inner_, z_t, t, cond, w_);
    }
    Stage stage() const override { return inner_->stage(); }

private:
    DenoiserPtr inner_;
    double w_;
};

}  // namespace

DenoiserPtr oracle_fixed(Grid z0, Stage stage) {
    return std::make_shared<FixedOracle>(std::move(z0), stage);
}

DenoiserPtr oracle_gaussian(Grid mu, Grid var, Stage stage,
                            const NoiseSchedule& sched, const RelayConfig& relay,
                            Grid zL_known) {
    return std::make_shared<GaussianOracle>(std::move(mu), std::move(var), stage,
                                            sched, relay, std::move(zL_known));
}

Grid cfg_denoise(const Denoiser& denoiser, const Grid& z, int t,
                 ConditionId cond, double w) {
    Grid uncond = denoiser.predict(z, t, std::nullopt, std::nullopt);
    if (!cond.has_value()) return uncond;
    Grid condpred = denoiser.predict(z, t, cond, std::nullopt);
    Grid out(z.channels, z.height, z.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = uncond.data[i] + w * (condpred.data[i] - uncond.data[i]);
    }
    return out;
}

DenoiserPtr with_guidance(DenoiserPtr inner, double w) {
    return std::make_shared<GuidedDenoiser>(std::move(inner), w);
}

}  // namespace relaydiff

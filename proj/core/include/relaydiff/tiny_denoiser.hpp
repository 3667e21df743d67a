// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relaydiff/denoiser.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/rng.hpp"

namespace relaydiff {

/// Number of fixed Fourier-style features the guidance strength is projected
/// from before entering the channel embedding.
inline constexpr int kGuidanceFeatures = 8;

struct TinyNetConfig {
    int in_channels = 4;
    int hidden_channels = 16;
    int mid_layers = 2;  // 3x3 conv blocks between the stem and the head
    int num_classes = 2;
    int time_steps = 1000;  // embedding table has time_steps + 1 rows
    Stage stage = Stage::base;
    bool w_conditioned = false;  // set once distillation bakes guidance in

    int param_count() const;
    bool operator==(const TinyNetConfig&) const = default;
};

/// Small convolutional z0-predictor: 3x3 conv stem, SiLU mid blocks, 3x3
/// head. Timestep, class condition and (optionally) guidance strength enter
/// as per-channel biases after the stem. All parameters live in one flat
/// vector so the optimizer, checkpointing and finite differences stay simple.
class TinyNet {
public:
    explicit TinyNet(TinyNetConfig cfg);

    static TinyNet randomized(const TinyNetConfig& cfg, Rng& rng);

    const TinyNetConfig& config() const { return cfg_; }
    TinyNetConfig& mutable_config() { return cfg_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    Grid forward(const Grid& z, int t, ConditionId cond,
                 std::optional<double> w) const;

    /// Forward pass that keeps intermediates for backward().
    struct Tape {
        Grid input;
        int t = 0;
        int cond_row = 0;
        std::optional<double> w;
        std::vector<Grid> pre;   // pre-activation of stem + mid blocks
        std::vector<Grid> post;  // SiLU outputs
    };

    Grid forward_tape(const Grid& z, int t, ConditionId cond,
                      std::optional<double> w, Tape& tape) const;

    /// Accumulates parameter gradients for d(loss)/d(output) = dout into
    /// grad (which must have param_count() entries).
    void backward(const Tape& tape, const Grid& dout,
                  std::vector<double>& grad) const;

    void save(const std::string& path) const;
    static TinyNet load(const std::string& path);

    // Flat-vector offsets, exposed for targeted tests (e.g. zeroing the
    // guidance projection).
    std::size_t w_proj_offset() const;
    std::size_t w_proj_size() const;
    std::size_t time_table_offset() const;
    std::size_t cond_table_offset() const;

private:
    TinyNetConfig cfg_;
    std::vector<double> params_;
};

/// Adapter exposing a TinyNet through the Denoiser interface.
DenoiserPtr make_tiny_denoiser(std::shared_ptr<const TinyNet> net);

std::vector<double> guidance_features(double w);

}  // namespace relaydiff

// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relaydiff/prompt_expansion.hpp"
#include "relaydiff/schedule.hpp"
#include "relaydiff/tiling.hpp"

namespace relaydiff {

/// One structured config file drives every CLI run; flags override fields by
/// dotted path. Unknown keys are rejected to catch typos early.
struct RunConfig {
    struct Schedule {
        std::string rule = "linear";
        int T = 1000;
        double sigma_max = 1.0;
        int T_r = 500;
        std::string delta_rule = "zero";  // "zero" | "sigma_prev_scale:<f>"
    } schedule;

    struct Sampler {
        int base_steps = 50;
        int sr_steps = 10;
        double w_base = 7.5;
        double w_sr = 7.5;
        std::string delta_profile = "zero";
        int tile_h = 64;
        int tile_w = 64;
        int tile_overlap = 16;
        std::string tile_blend = "gaussian-weight";
    } sampler;

    struct Pipeline {
        int base_resolution = 32;
        int image_channels = 1;
        int hops = 1;
        int codec_factor = 2;
        int tile_threshold_cells = 16384;
        bool tiling_enabled = false;
    } pipeline;

    struct Dataset {
        int size = 64;
        int train_items = 384;
        int heldout_items = 64;
        std::uint64_t seed = 1234;
        std::string path;  // optional directory of hr_*.ppm/lr_*.ppm pairs
    } dataset;

    struct Training {
        std::string stage = "base";
        int epochs = 24;
        int batch_size = 8;
        double lr = 3e-3;
        std::uint64_t seed = 42;
        int hidden_channels = 16;
        int mid_layers = 2;
        double cond_dropout = 0.1;
    } training;

    struct Distill {
        std::string stage = "sr";
        int initial_steps = 8;
        int rounds = 2;
        double w_min = 1.0;
        double w_max = 10.0;
        int iters_per_round = 400;
        int batch_size = 8;
        double lr = 1e-3;
        std::uint64_t seed = 77;
        std::string teacher;  // checkpoint path
    } distill;

    struct Eval {
        int sr_steps = 10;
        double w = 1.0;
        double corruption_amp = 0.12;
        std::vector<double> ablate_fractions = {0.2, 0.4, 0.5, 0.6, 0.8};
        int ablate_epochs = 12;
        std::uint64_t seed = 99;
    } eval;

    ExpansionConfig expansion;
    std::string prompt;  // logged to the manifest after optional expansion

    struct Run {
        std::uint64_t seed = 7;
        int workers = 4;
        bool deterministic = false;
        std::string out_dir;  // default runs/<timestamp>-<hash>
        std::string base_checkpoint;
        std::string sr_checkpoint;
        /// "checkpoint" loads the paths above; "seeded-random" builds
        /// randomly initialized nets (useful for plumbing/determinism runs).
        std::string denoisers = "checkpoint";
        std::vector<int> conditions = {0, 1};
    } run;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);

    // Derived objects.
    NoiseSchedule make_schedule() const;
    RelayConfig make_relay(const NoiseSchedule& sched) const;
    DeltaProfile sampler_delta_profile() const;
    TileConfig tile_config() const;
    int effective_workers() const {
        return run.deterministic ? 1 : std::max(1, run.workers);
    }
};

DeltaProfile parse_delta_rule(const std::string& rule);

/// Loads a config file; a run manifest (with an embedded "config" object) is
/// accepted too, so runs can be reproduced from their manifests.
RunConfig load_config(const std::string& path);

/// Applies "dotted.path=value" overrides; values parse as JSON when possible
/// and fall back to strings.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// FNV-1a over the canonical dump; stable across runs.
std::string config_hash(const nlohmann::json& config);

}  // namespace relaydiff

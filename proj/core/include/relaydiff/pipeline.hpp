// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaydiff/codec.hpp"
#include "relaydiff/denoiser.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/sampler.hpp"
#include "relaydiff/schedule.hpp"
#include "relaydiff/tiling.hpp"

namespace relaydiff {

/// Two-stage cascade description: base generation at base_resolution, then
/// `hops` relaying super-resolution passes, each doubling the resolution.
struct PipelineRunConfig {
    int base_resolution = 32;
    int image_channels = 1;
    int hops = 1;
    int base_steps = 50;
    int sr_steps = 10;
    double w_base = 7.5;
    double w_sr = 7.5;
    std::uint64_t seed = 0;
    std::optional<TileConfig> tile;
    /// Latents with more than this many spatial cells refuse to run untiled.
    int tile_threshold_cells = 128 * 128;
    int workers = 1;
};

struct StageTiming {
    std::string stage;
    double ms = 0.0;
};

struct GenerateResult {
    Grid image;
    std::vector<StageTiming> timings;
};

/// Base generation -> decode -> bilinear 2x upsample -> encode -> relay
/// super-resolution -> decode, repeated for each hop. hops = 0 returns the
/// base output. Deterministic given the seed.
GenerateResult generate(ConditionId cond, const PipelineRunConfig& cfg,
                        const NoiseSchedule& sched, const RelayConfig& relay,
                        DenoiserPtr base_denoiser, DenoiserPtr sr_denoiser,
                        const Codec& codec);

/// The super-resolution stage alone, iterated `hops` times from an existing
/// image. Requires hops >= 1.
GenerateResult iterative_super_resolve(const Grid& image, int hops,
                                       const PipelineRunConfig& cfg,
                                       const NoiseSchedule& sched,
                                       const RelayConfig& relay,
                                       DenoiserPtr sr_denoiser,
                                       const Codec& codec);

}  // namespace relaydiff

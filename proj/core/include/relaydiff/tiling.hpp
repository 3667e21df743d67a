// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "relaydiff/denoiser.hpp"
#include "relaydiff/grid.hpp"

namespace relaydiff {

enum class TileBlend { uniform, gaussian_weight };

TileBlend tile_blend_from_string(const std::string& s);
std::string to_string(TileBlend blend);

struct TileConfig {
    int tile_height = 64;
    int tile_width = 64;
    int overlap = 16;
    TileBlend blend = TileBlend::gaussian_weight;
};

void validate_tiles(const TileConfig& tiles);

/// Runs the denoiser on overlapping blocks and blends the block predictions
/// with per-pixel normalized weights. Falls back to one full-frame call when
/// the tile covers the whole grid. workers > 1 evaluates tiles concurrently;
/// the blend is a fixed-order reduction, so results do not depend on timing.
Grid tiled_denoise(const Denoiser& denoiser, const Grid& z, int t,
                   ConditionId cond, std::optional<double> w,
                   const TileConfig& tiles, int workers = 1);

/// Drop-in wrapper so samplers can run tiled without knowing about it.
DenoiserPtr make_tiled_denoiser(DenoiserPtr inner, const TileConfig& tiles,
                                int workers = 1);

}  // namespace relaydiff

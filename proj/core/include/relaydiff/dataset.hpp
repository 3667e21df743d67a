// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "relaydiff/codec.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/training.hpp"

namespace relaydiff {

/// Procedural toy data: class 0 = two-tone soft-edged shapes, class 1 =
/// band-limited sinusoid textures. hr is 1 x size x size in [0,1]; lr is the
/// exact area-downsampled half-resolution partner.
struct ToyItem {
    Grid hr;
    Grid lr;
    int cond = 0;
};

inline constexpr int kToyNumClasses = 2;

struct ToyDatasetConfig {
    int size = 64;  // hr resolution, even
    int items = 512;
    std::uint64_t seed = 1234;
};

std::vector<ToyItem> make_toy_dataset(const ToyDatasetConfig& cfg);

/// Base-stage training latents: z0 = encode(lr).
std::vector<TrainItem> to_base_train_items(const std::vector<ToyItem>& items,
                                           const Codec& codec);

/// SR-stage training latents: z0 = encode(hr), zL = encode(bilinear-up(lr)).
std::vector<TrainItem> to_sr_train_items(const std::vector<ToyItem>& items,
                                         const Codec& codec);

/// Seeded band-limited perturbation of a low-res image, standing in for
/// base-stage generation artifacts in the starting-point ablation.
Grid corrupt_lr(const Grid& lr, double amplitude, std::uint64_t seed);

}  // namespace relaydiff

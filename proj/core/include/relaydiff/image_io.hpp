// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "relaydiff/grid.hpp"

namespace relaydiff {

/// Writes a binary PPM (P6, maxval 255). Single-channel grids are replicated
/// to gray RGB; values are clamped to [0,1] and rounded.
void write_ppm(const std::string& path, const Grid& image);

/// Reads binary P6 (3 channels) or P5 (1 channel), scaled to [0,1].
Grid read_ppm(const std::string& path);

/// Raw latent dump: small header (dims, codec factor) + float64 payload.
void write_latent(const std::string& path, const Grid& latent, int factor);

struct LatentFile {
    Grid latent;
    int factor = 0;
};

LatentFile read_latent(const std::string& path);

}  // namespace relaydiff

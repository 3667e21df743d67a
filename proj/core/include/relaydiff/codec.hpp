// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "relaydiff/grid.hpp"

namespace relaydiff {

/// Pixel <-> latent codec. decode(encode(x)) must reproduce x for the default
/// codec; spatial dims shrink by spatial_factor() in each direction.
class Codec {
public:
    virtual ~Codec() = default;
    virtual Grid encode(const Grid& pixels) const = 0;
    virtual Grid decode(const Grid& latent) const = 0;
    virtual int spatial_factor() const = 0;
};

/// Space-to-depth rearrangement followed by a fixed orthonormal mixing of the
/// f*f sub-pixel channels (DCT-II basis). Exactly invertible and norm
/// preserving, so latent-space identities hold without autoencoder error.
class SpaceToDepthCodec final : public Codec {
public:
    explicit SpaceToDepthCodec(int factor = 2);

    Grid encode(const Grid& pixels) const override;
    Grid decode(const Grid& latent) const override;
    int spatial_factor() const override { return factor_; }

private:
    int factor_;
    std::vector<double> mixing_;  // (f*f) x (f*f), rows orthonormal
};

/// Separable bilinear upsampling with half-pixel centers.
Grid resize_bilinear_up(const Grid& img, int out_h, int out_w);

/// Area-consistent downsampling (box average with fractional edge weights).
Grid resize_area_down(const Grid& img, int out_h, int out_w);

enum class ResizeMode { bilinear_down, bilinear_up };

Grid resize(const Grid& img, int out_h, int out_w, ResizeMode mode);

}  // namespace relaydiff

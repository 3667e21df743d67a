// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace relaydiff {

class Rng;

/// Dense (channels, height, width) tensor of doubles, row-major within a
/// channel. Serves both pixel images (values nominally in [0,1]) and latent
/// grids.
struct Grid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int c, int h, int w, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const Grid& other) const {
        return channels == other.channels && height == other.height &&
               width == other.width;
    }
};

// Elementwise helpers. All binary ops require matching shapes and throw
// std::invalid_argument otherwise.
Grid operator+(const Grid& a, const Grid& b);
Grid operator-(const Grid& a, const Grid& b);
Grid operator*(const Grid& a, double s);
Grid operator*(double s, const Grid& a);
Grid& operator+=(Grid& a, const Grid& b);

/// a + s * b
Grid axpy(const Grid& a, double s, const Grid& b);
/// wa * a + wb * b
Grid lerp2(double wa, const Grid& a, double wb, const Grid& b);
/// wa * a + wb * b + wc * c
Grid lerp3(double wa, const Grid& a, double wb, const Grid& b, double wc,
           const Grid& c);

void require_same_shape(const Grid& a, const Grid& b, const char* what);

double linf_norm(const Grid& a);
double linf_diff(const Grid& a, const Grid& b);
/// Sum of squared entries.
double squared_norm(const Grid& a);
/// Mean of squared differences over all entries.
double mean_squared_error(const Grid& a, const Grid& b);
double mean_value(const Grid& a);
bool all_finite(const Grid& a);

void fill_randn(Grid& g, Rng& rng);
Grid randn_like(const Grid& g, Rng& rng);
void clamp01(Grid& g);

}  // namespace relaydiff

// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "relaydiff/rng.hpp"

namespace relaydiff {

Grid::Grid(int c, int h, int w, double fill)
    : channels(c), height(h), width(w) {
    if (c <= 0 || h <= 0 || w <= 0) {
        throw std::invalid_argument("Grid dimensions must be positive, got " +
                                    std::to_string(c) + "x" + std::to_string(h) +
                                    "x" + std::to_string(w));
    }
    data.assign(static_cast<std::size_t>(c) * h * w, fill);
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(
            std::string(what) + ": shape mismatch (" + std::to_string(a.channels) +
            "x" + std::to_string(a.height) + "x" + std::to_string(a.width) +
            " vs " + std::to_string(b.channels) + "x" + std::to_string(b.height) +
            "x" + std::to_string(b.width) + ")");
    }
}

Grid operator+(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "grid add");
    Grid out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Grid operator-(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "grid sub");
    Grid out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Grid operator*(const Grid& a, double s) {
    Grid out = a;
    for (double& v : out.data) v *= s;
    return out;
}

Grid operator*(double s, const Grid& a) { return a * s; }

Grid& operator+=(Grid& a, const Grid& b) {
    require_same_shape(a, b, "grid add");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    return a;
}

Grid axpy(const Grid& a, double s, const Grid& b) {
    require_same_shape(a, b, "axpy");
    Grid out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += s * b.data[i];
    return out;
}

Grid lerp2(double wa, const Grid& a, double wb, const Grid& b) {
    require_same_shape(a, b, "lerp2");
    Grid out(a.channels, a.height, a.width);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = wa * a.data[i] + wb * b.data[i];
    return out;
}

Grid lerp3(double wa, const Grid& a, double wb, const Grid& b, double wc,
           const Grid& c) {
    require_same_shape(a, b, "lerp3");
    require_same_shape(a, c, "lerp3");
    Grid out(a.channels, a.height, a.width);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = wa * a.data[i] + wb * b.data[i] + wc * c.data[i];
    return out;
}

double linf_norm(const Grid& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::fabs(v));
    return m;
}

double linf_diff(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "linf_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

double squared_norm(const Grid& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

double mean_squared_error(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "mean_squared_error");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

double mean_value(const Grid& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s / static_cast<double>(a.data.size());
}

bool all_finite(const Grid& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

void fill_randn(Grid& g, Rng& rng) {
    for (double& v : g.data) v = rng.normal();
}

Grid randn_like(const Grid& g, Rng& rng) {
    Grid out(g.channels, g.height, g.width);
    fill_randn(out, rng);
    return out;
}

void clamp01(Grid& g) {
    for (double& v : g.data) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace relaydiff

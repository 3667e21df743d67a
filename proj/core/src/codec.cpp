// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace relaydiff {

namespace {

// Orthonormal DCT-II matrix of size n x n.
std::vector<double> dct_matrix(int n) {
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    const double pi = 3.1415926535897932384626433832795;
    for (int k = 0; k < n; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int i = 0; i < n; ++i) {
            m[static_cast<std::size_t>(k) * n + i] =
                scale * std::cos(pi * (i + 0.5) * k / n);
        }
    }
    return m;
}

}  // namespace

SpaceToDepthCodec::SpaceToDepthCodec(int factor) : factor_(factor) {
    if (factor < 1) throw std::invalid_argument("codec factor must be >= 1");
    mixing_ = dct_matrix(factor * factor);
}

Grid SpaceToDepthCodec::encode(const Grid& pixels) const {
    const int f = factor_;
    if (pixels.height % f != 0 || pixels.width % f != 0) {
        throw std::invalid_argument(
            "encode: dims " + std::to_string(pixels.height) + "x" +
            std::to_string(pixels.width) + " not divisible by factor " +
            std::to_string(f));
    }
    const int n = f * f;
    const int oh = pixels.height / f;
    const int ow = pixels.width / f;
    Grid out(pixels.channels * n, oh, ow);
    std::vector<double> block(n);
    for (int c = 0; c < pixels.channels; ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                for (int dy = 0; dy < f; ++dy)
                    for (int dx = 0; dx < f; ++dx)
                        block[dy * f + dx] = pixels.at(c, y * f + dy, x * f + dx);
                for (int k = 0; k < n; ++k) {
                    double acc = 0.0;
                    const double* row = &mixing_[static_cast<std::size_t>(k) * n];
                    for (int i = 0; i < n; ++i) acc += row[i] * block[i];
                    out.at(c * n + k, y, x) = acc;
                }
            }
        }
    }
    return out;
}

Grid SpaceToDepthCodec::decode(const Grid& latent) const {
    const int f = factor_;
    const int n = f * f;
    if (latent.channels % n != 0) {
        throw std::invalid_argument("decode: channel count " +
                                    std::to_string(latent.channels) +
                                    " not divisible by factor^2");
    }
    const int pc = latent.channels / n;
    Grid out(pc, latent.height * f, latent.width * f);
    std::vector<double> coeff(n);
    for (int c = 0; c < pc; ++c) {
        for (int y = 0; y < latent.height; ++y) {
            for (int x = 0; x < latent.width; ++x) {
                for (int k = 0; k < n; ++k) coeff[k] = latent.at(c * n + k, y, x);
                // Inverse of an orthonormal matrix is its transpose.
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int k = 0; k < n; ++k)
                        acc += mixing_[static_cast<std::size_t>(k) * n + i] * coeff[k];
                    out.at(c, y * f + i / f, x * f + i % f) = acc;
                }
            }
        }
    }
    return out;
}

Grid resize_bilinear_up(const Grid& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize target dims must be positive");
    Grid out(img.channels, out_h, out_w);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            double fy = (y + 0.5) * sy - 0.5;
            fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, img.height - 1);
            const double wy = fy - y0;
            for (int x = 0; x < out_w; ++x) {
                double fx = (x + 0.5) * sx - 0.5;
                fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, img.width - 1);
                const double wx = fx - x0;
                const double top =
                    (1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
                const double bot =
                    (1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
                out.at(c, y, x) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

Grid resize_area_down(const Grid& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize target dims must be positive");
    Grid out(img.channels, out_h, out_w);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            const double y_lo = y * sy;
            const double y_hi = (y + 1) * sy;
            const int iy_lo = static_cast<int>(std::floor(y_lo));
            const int iy_hi = std::min(static_cast<int>(std::ceil(y_hi)), img.height);
            for (int x = 0; x < out_w; ++x) {
                const double x_lo = x * sx;
                const double x_hi = (x + 1) * sx;
                const int ix_lo = static_cast<int>(std::floor(x_lo));
                const int ix_hi =
                    std::min(static_cast<int>(std::ceil(x_hi)), img.width);
                double acc = 0.0;
                double wsum = 0.0;
                for (int iy = iy_lo; iy < iy_hi; ++iy) {
                    const double wy = std::min<double>(iy + 1, y_hi) -
                                      std::max<double>(iy, y_lo);
                    for (int ix = ix_lo; ix < ix_hi; ++ix) {
                        const double wx = std::min<double>(ix + 1, x_hi) -
                                          std::max<double>(ix, x_lo);
                        acc += wy * wx * img.at(c, iy, ix);
                        wsum += wy * wx;
                    }
                }
                out.at(c, y, x) = acc / wsum;
            }
        }
    }
    return out;
}

Grid resize(const Grid& img, int out_h, int out_w, ResizeMode mode) {
    if (out_h == img.height && out_w == img.width) return img;
    switch (mode) {
        case ResizeMode::bilinear_up:
            return resize_bilinear_up(img, out_h, out_w);
        case ResizeMode::bilinear_down:
            return resize_area_down(img, out_h, out_w);
    }
    throw std::invalid_argument("bad resize mode");
}

}  // namespace relaydiff

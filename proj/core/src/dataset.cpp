// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relaydiff/rng.hpp"

namespace relaydiff {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// Coverage-style soft edge: 0 inside distance -e, 1 beyond +e.
double soft_step(double signed_dist, double edge) {
    const double u = std::clamp((signed_dist / edge + 1.0) * 0.5, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

Grid render_shape(int size, Rng& rng) {
    Grid img(1, size, size);
    const double bg = rng.uniform(0.05, 0.45);
    const double fg = bg + rng.uniform(0.35, 0.5);
    const double edge = rng.uniform(0.9, 1.6);  // pixels of softness
    const int kind = static_cast<int>(rng.uniform_index(3));
    const double cx = rng.uniform(0.30, 0.70) * size;
    const double cy = rng.uniform(0.30, 0.70) * size;

    if (kind == 0) {  // disk
        const double r = rng.uniform(0.15, 0.32) * size;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy) - r;
                img.at(0, y, x) = fg + (bg - fg) * soft_step(d, edge);
            }
    } else if (kind == 1) {  // axis-aligned rounded rectangle
        const double hw = rng.uniform(0.12, 0.30) * size;
        const double hh = rng.uniform(0.12, 0.30) * size;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double dx = std::fabs(x + 0.5 - cx) - hw;
                const double dy = std::fabs(y + 0.5 - cy) - hh;
                const double d = std::max(dx, dy);
                img.at(0, y, x) = fg + (bg - fg) * soft_step(d, edge);
            }
    } else {  // half-plane with random orientation
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        const double nx = std::cos(theta);
        const double ny = std::sin(theta);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double d = (x + 0.5 - cx) * nx + (y + 0.5 - cy) * ny;
                img.at(0, y, x) = fg + (bg - fg) * soft_step(d, edge);
            }
    }
    return img;
}

// Sum of sinusoids with frequencies between 2 and 12 cycles per image: above
// what bilinear upsampling preserves faithfully, below the low-res Nyquist,
// so super-resolution has recoverable headroom.
Grid render_texture(int size, Rng& rng) {
    Grid img(1, size, size);
    const int components = 4 + static_cast<int>(rng.uniform_index(3));
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < components; ++k) {
        const double cycles = rng.uniform(2.0, 12.0);
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        waves.push_back({cycles * std::cos(theta) / size,
                         cycles * std::sin(theta) / size,
                         rng.uniform(0.0, 2.0 * kPi), 1.0 / std::sqrt(cycles)});
    }
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = 0.0;
            for (const Wave& wv : waves)
                v += wv.amp * std::sin(2.0 * kPi * (wv.fx * x + wv.fy * y) + wv.phase);
            img.at(0, y, x) = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double span = std::max(hi - lo, 1e-9);
    for (double& v : img.data) v = 0.1 + 0.8 * (v - lo) / span;
    return img;
}

}  // namespace

std::vector<ToyItem> make_toy_dataset(const ToyDatasetConfig& cfg) {
    if (cfg.size < 2 || cfg.size % 2 != 0)
        throw std::invalid_argument("toy dataset size must be even and >= 2");
    if (cfg.items < 1) throw std::invalid_argument("toy dataset needs items >= 1");
    Rng root(cfg.seed);
    std::vector<ToyItem> out;
    out.reserve(cfg.items);
    for (int i = 0; i < cfg.items; ++i) {
        Rng rng = root.fork(static_cast<std::uint64_t>(i));
        ToyItem item;
        item.cond = i % kToyNumClasses;
        item.hr = item.cond == 0 ? render_shape(cfg.size, rng)
                                 : render_texture(cfg.size, rng);
        item.lr = resize_area_down(item.hr, cfg.size / 2, cfg.size / 2);
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<TrainItem> to_base_train_items(const std::vector<ToyItem>& items,
                                           const Codec& codec) {
    std::vector<TrainItem> out;
    out.reserve(items.size());
    for (const ToyItem& it : items) {
        TrainItem t;
        t.z0 = codec.encode(it.lr);
        t.cond = it.cond;
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<TrainItem> to_sr_train_items(const std::vector<ToyItem>& items,
                                         const Codec& codec) {
    std::vector<TrainItem> out;
    out.reserve(items.size());
    for (const ToyItem& it : items) {
        TrainItem t;
        t.z0 = codec.encode(it.hr);
        Grid up = resize_bilinear_up(it.lr, it.hr.height, it.hr.width);
        t.zL = codec.encode(up);
        t.cond = it.cond;
        out.push_back(std::move(t));
    }
    return out;
}

Grid corrupt_lr(const Grid& lr, double amplitude, std::uint64_t seed) {
    if (amplitude == 0.0) return lr;
    Rng rng(seed);
    Grid out = lr;
    const int size = lr.height;
    const int components = 6;
    for (int k = 0; k < components; ++k) {
        const double cycles = rng.uniform(3.0, 10.0);
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        const double fx = cycles * std::cos(theta) / size;
        const double fy = cycles * std::sin(theta) / size;
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        const double amp = amplitude / std::sqrt(static_cast<double>(components) / 2.0);
        for (int c = 0; c < lr.channels; ++c)
            for (int y = 0; y < lr.height; ++y)
                for (int x = 0; x < lr.width; ++x)
                    out.at(c, y, x) +=
                        amp * std::sin(2.0 * kPi * (fx * x + fy * y) + phase);
    }
    clamp01(out);
    return out;
}

}  // namespace relaydiff

// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <utility>
#include <vector>

namespace relaydiff {

TileBlend tile_blend_from_string(const std::string& s) {
    if (s == "uniform") return TileBlend::uniform;
    if (s == "gaussian" || s == "gaussian-weight" || s == "gaussian_weight")
        return TileBlend::gaussian_weight;
    throw std::invalid_argument("unknown tile blend: " + s);
}

std::string to_string(TileBlend blend) {
    return blend == TileBlend::uniform ? "uniform" : "gaussian-weight";
}

void validate_tiles(const TileConfig& tiles) {
    if (tiles.tile_height < 1 || tiles.tile_width < 1)
        throw std::invalid_argument("tile dims must be positive");
    if (tiles.overlap < 0 ||
        tiles.overlap >= std::min(tiles.tile_height, tiles.tile_width))
        throw std::invalid_argument("overlap must satisfy 0 <= overlap < min(tile dims)");
}

namespace {

std::vector<int> tile_starts(int extent, int tile, int overlap) {
    std::vector<int> starts;
    const int stride = tile - overlap;
    for (int s = 0;; s += stride) {
        if (s + tile >= extent) {
            starts.push_back(extent - tile);  // align last tile to the edge
            break;
        }
        starts.push_back(s);
    }
    return starts;
}

// Separable positive window over a tile axis; peaked at the center so seams
// defer to better-contextualized interior predictions.
std::vector<double> axis_weights(int n, TileBlend blend) {
    std::vector<double> w(n, 1.0);
    if (blend == TileBlend::gaussian_weight) {
        const double mid = (n - 1) / 2.0;
        const double s = std::max(1.0, n / 4.0);
        for (int i = 0; i < n; ++i) {
            const double d = (i - mid) / s;
            w[i] = std::exp(-0.5 * d * d);
        }
    }
    return w;
}

Grid crop(const Grid& g, int y0, int x0, int h, int w) {
    Grid out(g.channels, h, w);
    for (int c = 0; c < g.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = g.at(c, y0 + y, x0 + x);
    return out;
}

}  // namespace

Grid tiled_denoise(const Denoiser& denoiser, const Grid& z, int t,
                   ConditionId cond, std::optional<double> w,
                   const TileConfig& tiles, int workers) {
    validate_tiles(tiles);
    if (tiles.tile_height >= z.height && tiles.tile_width >= z.width) {
        return denoiser.predict(z, t, cond, w);  // full-frame fallback
    }
    const int th = std::min(tiles.tile_height, z.height);
    const int tw = std::min(tiles.tile_width, z.width);
    const std::vector<int> ys = tile_starts(z.height, th, tiles.overlap);
    const std::vector<int> xs = tile_starts(z.width, tw, tiles.overlap);
    const std::vector<double> wy = axis_weights(th, tiles.blend);
    const std::vector<double> wx = axis_weights(tw, tiles.blend);

    struct Job {
        int y0, x0;
        Grid pred;
    };
    std::vector<Job> jobs;
    for (int y0 : ys)
        for (int x0 : xs) jobs.push_back({y0, x0, Grid()});

    auto run_job = [&](Job& job) {
        Grid block = crop(z, job.y0, job.x0, th, tw);
        job.pred = denoiser.predict(block, t, cond, w);
        require_same_shape(job.pred, block, "tiled denoiser output");
    };

    if (workers <= 1 || jobs.size() == 1) {
        for (Job& job : jobs) run_job(job);
    } else {
        std::vector<std::future<void>> futs;
        futs.reserve(jobs.size());
        for (Job& job : jobs)
            futs.push_back(std::async(std::launch::async, [&run_job, &job] { run_job(job); }));
        for (auto& f : futs) f.get();
    }

    // Deterministic reduction: accumulate in job order, then normalize.
    Grid acc(z.channels, z.height, z.width, 0.0);
    Grid wsum(1, z.height, z.width, 0.0);
    for (const Job& job : jobs) {
        for (int y = 0; y < th; ++y) {
            for (int x = 0; x < tw; ++x) {
                const double weight = wy[y] * wx[x];
                wsum.at(0, job.y0 + y, job.x0 + x) += weight;
                for (int c = 0; c < z.channels; ++c)
                    acc.at(c, job.y0 + y, job.x0 + x) += weight * job.pred.at(c, y, x);
            }
        }
    }
    for (int c = 0; c < z.channels; ++c)
        for (int y = 0; y < z.height; ++y)
            for (int x = 0; x < z.width; ++x) acc.at(c, y, x) /= wsum.at(0, y, x);
    return acc;
}

namespace {

class TiledDenoiser final : public Denoiser {
public:
    TiledDenoiser(DenoiserPtr inner, TileConfig tiles, int workers)
        : inner_(std::move(inner)), tiles_(tiles), workers_(workers) {
        validate_tiles(tiles_);
    }

    Grid predict(const Grid& z_t, int t, ConditionId cond,
                 std::optional<double> w) const override {
        return tiled_denoise(*inner_, z_t, t, cond, w, tiles_, workers_);
    }
    Stage stage() const override { return inner_->stage(); }
    bool consumes_guidance() const override { return inner_->consumes_guidance(); }

private:
    DenoiserPtr inner_;
    TileConfig tiles_;
    int workers_;
};

}  // namespace

DenoiserPtr make_tiled_denoiser(DenoiserPtr inner, const TileConfig& tiles,
                                int workers) {
    return std::make_shared<TiledDenoiser>(std::move(inner), tiles, workers);
}

}  // namespace relaydiff

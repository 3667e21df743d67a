// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/pipeline.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

#include "relaydiff/rng.hpp"

namespace relaydiff {

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}
    template <typename Fn>
    auto run(const std::string& name, Fn&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = fn();
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                      t0)
                .count();
        out_.push_back({name, ms});
        return result;
    }

private:
    std::vector<StageTiming>& out_;
};

DenoiserPtr prepare_sr_denoiser(DenoiserPtr sr, double w,
                                const PipelineRunConfig& cfg, int latent_cells,
                                const std::string& stage_tag) {
    DenoiserPtr den = with_guidance(std::move(sr), w);
    if (latent_cells > cfg.tile_threshold_cells) {
        if (!cfg.tile.has_value()) {
            throw std::runtime_error(
                stage_tag + ": latent of " + std::to_string(latent_cells) +
                " cells exceeds the memory guard (" +
                std::to_string(cfg.tile_threshold_cells) +
                ") and tiling is not enabled");
        }
        den = make_tiled_denoiser(den, *cfg.tile, cfg.workers);
    }
    return den;
}

}  // namespace

GenerateResult generate(ConditionId cond, const PipelineRunConfig& cfg,
                        const NoiseSchedule& sched, const RelayConfig& relay,
                        DenoiserPtr base_denoiser, DenoiserPtr sr_denoiser,
                        const Codec& codec) {
    if (cfg.hops < 0) throw std::invalid_argument("hops must be >= 0");
    if (cfg.base_resolution % codec.spatial_factor() != 0)
        throw std::invalid_argument("base resolution incompatible with codec factor");

    GenerateResult result;
    StageClock clock(result.timings);
    Rng rng(cfg.seed);

    const int f = codec.spatial_factor();
    const int lat_hw = cfg.base_resolution / f;
    const int lat_ch = cfg.image_channels * f * f;

    Grid image = clock.run("base", [&] {
        Grid noise(lat_ch, lat_hw, lat_hw);
        const double sigma_T = sched.at(sched.T);
        for (double& v : noise.data) v = sigma_T * rng.normal();
        DenoiserPtr den = with_guidance(base_denoiser, cfg.w_base);
        BaseSampleOptions opts;
        Grid z0 = base_sample(noise, *den, cond, sched, cfg.base_steps, opts);
        return codec.decode(z0);
    });

    for (int hop = 1; hop <= cfg.hops; ++hop) {
        const std::string tag = "sr_hop_" + std::to_string(hop);
        image = clock.run(tag, [&] {
            Grid up = resize_bilinear_up(image, image.height * 2, image.width * 2);
            Grid zL = codec.encode(up);
            DenoiserPtr den = prepare_sr_denoiser(sr_denoiser, cfg.w_sr, cfg,
                                                  zL.height * zL.width, tag);
            RelaySampleOptions opts;
            opts.steps = cfg.sr_steps;
            Grid out_latent =
                relay_sample(zL, *den, cond, sched, relay, rng, opts);
            return codec.decode(out_latent);
        });
    }
    clamp01(image);
    result.image = std::move(image);
    return result;
}

GenerateResult iterative_super_resolve(const Grid& image, int hops,
                                       const PipelineRunConfig& cfg,
                                       const NoiseSchedule& sched,
                                       const RelayConfig& relay,
                                       DenoiserPtr sr_denoiser,
                                       const Codec& codec) {
    if (hops < 1) throw std::invalid_argument("iterative SR needs hops >= 1");
    GenerateResult result;
    StageClock clock(result.timings);
    Rng rng(cfg.seed);

    Grid current = image;
    for (int hop = 1; hop <= hops; ++hop) {
        const std::string tag = "sr_hop_" + std::to_string(hop);
        current = clock.run(tag, [&] {
            Grid up = resize_bilinear_up(current, current.height * 2, current.width * 2);
            Grid zL = codec.encode(up);
            DenoiserPtr den = prepare_sr_denoiser(sr_denoiser, cfg.w_sr, cfg,
                                                  zL.height * zL.width, tag);
            RelaySampleOptions opts;
            opts.steps = cfg.sr_steps;
            Grid out_latent =
                relay_sample(zL, *den, std::nullopt, sched, relay, rng, opts);
            return codec.decode(out_latent);
        });
    }
    clamp01(current);
    result.image = std::move(current);
    return result;
}

}  // namespace relaydiff

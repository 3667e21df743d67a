// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "relaydiff/rng.hpp"
#include "relaydiff/tiny_denoiser.hpp"
#include "relaydiff/training.hpp"

namespace relaydiff {

namespace {

// Wilson-Hilferty approximation of chi-square quantiles; ample for the wide
// 99% band at the sample counts used here.
double chi2_quantile(double df, double z) {
    const double a = 2.0 / (9.0 * df);
    const double w = 1.0 - a + z * std::sqrt(a);
    return df * w * w * w;
}

}  // namespace

TrajectoryReport verify_oracle_trajectory(const NoiseSchedule& sched,
                                          const RelayConfig& relay, int trials,
                                          std::uint64_t seed, double tolerance) {
    if (trials < 1) throw std::invalid_argument("trajectory check needs trials >= 1");
    validate_relay(sched, relay);
    for (int t = 1; t <= relay.T_r; ++t) {
        if (relay.delta_at(t) != 0.0)
            throw std::domain_error(
                "trajectory identity only holds for delta == 0 profiles");
    }

    Rng root(seed);
    TrajectoryReport report;
    report.trials = trials;
    report.tolerance = tolerance;

    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = root.fork(static_cast<std::uint64_t>(trial));
        // Small grids keep 100 trials x T_r steps cheap; vary the shape a bit.
        const int ch = 1 + static_cast<int>(rng.uniform_index(2));
        const int hw = 2 + static_cast<int>(rng.uniform_index(3));
        Grid z0(ch, hw, hw);
        Grid zL(ch, hw, hw);
        for (double& v : z0.data) v = rng.uniform(-2.0, 2.0);
        for (double& v : zL.data) v = rng.uniform(-2.0, 2.0);

        DenoiserPtr oracle = oracle_fixed(z0);
        Grid eps;  // recovered from the start state
        double worst = 0.0;
        RelaySampleOptions opts;
        opts.observer = [&](int t, const Grid& state, const Grid&) {
            if (t == relay.T_r) {
                const double sigma = sched.at(relay.T_r);
                eps = Grid(state.channels, state.height, state.width);
                for (std::size_t i = 0; i < eps.data.size(); ++i)
                    eps.data[i] = (state.data[i] - zL.data[i]) / sigma;
                return;
            }
            Grid expected = blur_transition(z0, zL, t, relay.T_r);
            for (std::size_t i = 0; i < expected.data.size(); ++i)
                expected.data[i] += sched.at(t) * eps.data[i];
            worst = std::max(worst, linf_diff(state, expected));
        };
        Grid out = relay_sample(zL, *oracle, std::nullopt, sched, relay, rng, opts);
        worst = std::max(worst, linf_diff(out, z0));
        report.max_deviation = std::max(report.max_deviation, worst);
    }
    report.pass = report.max_deviation <= tolerance;
    return report;
}

MomentReport marginal_moment_test(const NoiseSchedule& sched,
                                  const RelayConfig& relay, double z0, double zL,
                                  int n_samples, std::uint64_t seed) {
    if (n_samples < 10000)
        throw std::invalid_argument("moment test needs n_samples >= 10^4");
    validate_relay(sched, relay);

    const int T_r = relay.T_r;
    // Precompute per-step transition data; coefficients come from the same
    // code path the sampler uses.
    std::vector<double> a(T_r + 1), bz(T_r + 1), d(T_r + 1), blur(T_r + 1);
    for (int t = 0; t <= T_r; ++t)
        blur[t] = (static_cast<double>(T_r - t) / T_r) * z0 +
                  (static_cast<double>(t) / T_r) * zL;
    for (int t = 1; t <= T_r; ++t) {
        const RelayCoefficients k = relay_coefficients(t, sched, relay);
        a[t] = k.a;
        bz[t] = k.b * z0 + k.c * blur[t];  // exact-z0 transition constant
        d[t] = k.delta;
    }

    std::vector<double> sum(T_r + 1, 0.0), sumsq(T_r + 1, 0.0);
    Rng rng(seed);
    const double sigma_start = sched.at(T_r);
    for (int i = 0; i < n_samples; ++i) {
        double z = zL + sigma_start * rng.normal();
        sum[T_r] += z;
        sumsq[T_r] += z * z;
        for (int t = T_r; t >= 1; --t) {
            z = a[t] * z + bz[t];
            if (d[t] > 0.0) z += d[t] * rng.normal();
            sum[t - 1] += z;
            sumsq[t - 1] += z * z;
        }
    }

    MomentReport rep;
    rep.samples = n_samples;
    const double n = n_samples;
    rep.chi2_lo = chi2_quantile(n - 1.0, -2.5758293035489004);
    rep.chi2_hi = chi2_quantile(n - 1.0, 2.5758293035489004);
    rep.mean_pass = true;
    rep.var_pass = true;
    for (int t = 0; t <= T_r; ++t) {
        const double mean = sum[t] / n;
        const double var = (sumsq[t] - n * mean * mean) / (n - 1.0);
        const double sigma = sched.at(t);
        if (sigma == 0.0) {
            // Deterministic endpoint: allow only numerical dust.
            if (std::fabs(mean - blur[t]) > 1e-9 || var > 1e-18) rep.mean_pass = false;
            ++rep.steps_checked;
            continue;
        }
        const double se = sigma / std::sqrt(n);
        const double dev = std::fabs(mean - blur[t]) / se;
        rep.worst_mean_dev_se = std::max(rep.worst_mean_dev_se, dev);
        if (dev > 3.0) rep.mean_pass = false;
        const double stat = (n - 1.0) * var / (sigma * sigma);
        rep.worst_var_stat_lo = std::min(rep.worst_var_stat_lo, stat);
        rep.worst_var_stat_hi = std::max(rep.worst_var_stat_hi, stat);
        if (stat < rep.chi2_lo || stat > rep.chi2_hi) rep.var_pass = false;
        ++rep.steps_checked;
    }
    rep.pass = rep.mean_pass && rep.var_pass;
    return rep;
}

QualityReport sr_quality_report(const std::vector<Grid>& outputs,
                                const std::vector<Grid>& truths) {
    if (outputs.size() != truths.size() || outputs.empty())
        throw std::invalid_argument("quality report needs matched, nonempty pairs");
    QualityReport rep;
    rep.pairs.reserve(outputs.size());
    double mse_sum = 0.0, mse_sq = 0.0, psnr_sum = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        PairMetric m;
        m.mse = mean_squared_error(outputs[i], truths[i]);
        m.psnr = m.mse <= 0.0 ? 99.0 : std::min(99.0, -10.0 * std::log10(m.mse));
        mse_sum += m.mse;
        mse_sq += m.mse * m.mse;
        psnr_sum += m.psnr;
        rep.pairs.push_back(m);
    }
    const double n = static_cast<double>(rep.pairs.size());
    rep.mean_mse = mse_sum / n;
    rep.mean_psnr = psnr_sum / n;
    rep.stderr_mse =
        n > 1 ? std::sqrt(std::max(0.0, (mse_sq / n - rep.mean_mse * rep.mean_mse) /
                                            (n - 1.0)))
              : 0.0;
    return rep;
}

SrEvalResult evaluate_sr(DenoiserPtr sr_denoiser,
                         const std::vector<ToyItem>& heldout,
                         const NoiseSchedule& sched, const RelayConfig& relay,
                         const Codec& codec, const SrEvalConfig& cfg) {
    if (heldout.empty()) throw std::invalid_argument("no held-out items");
    SrEvalResult result;
    std::vector<Grid> truths;
    Rng root(cfg.seed);

    DenoiserPtr wrapped = with_guidance(std::move(sr_denoiser), cfg.w);
    if (cfg.tile.has_value())
        wrapped = make_tiled_denoiser(wrapped, *cfg.tile, cfg.workers);

    for (std::size_t i = 0; i < heldout.size(); ++i) {
        const ToyItem& item = heldout[i];
        Grid lr = cfg.corruption_amp > 0.0
                      ? corrupt_lr(item.lr, cfg.corruption_amp,
                                   splitmix64(cfg.seed ^ (7777 + i)))
                      : item.lr;
        Grid up = resize_bilinear_up(lr, item.hr.height, item.hr.width);
        Grid zL = codec.encode(up);

        Rng rng = root.fork(static_cast<std::uint64_t>(i));
        RelaySampleOptions opts;
        opts.steps = cfg.sr_steps;
        Grid out_latent =
            relay_sample(zL, *wrapped, item.cond, sched, relay, rng, opts);
        Grid out = codec.decode(out_latent);
        clamp01(out);

        result.outputs.push_back(std::move(out));
        result.baselines.push_back(std::move(up));
        truths.push_back(item.hr);
    }
    result.relay = sr_quality_report(result.outputs, truths);
    result.baseline = sr_quality_report(result.baselines, truths);
    result.mse_ratio = result.relay.mean_mse / result.baseline.mean_mse;
    return result;
}

std::vector<AblateRow> ablate_start(const std::vector<ToyItem>& train_items,
                                    const std::vector<ToyItem>& heldout,
                                    const NoiseSchedule& sched,
                                    const Codec& codec, const AblateConfig& cfg) {
    if (cfg.fractions.empty()) throw std::invalid_argument("no ablation fractions");
    std::vector<AblateRow> rows;
    const std::vector<TrainItem> sr_items = to_sr_train_items(train_items, codec);
    Rng seeder(cfg.seed);

    for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
        const double frac = cfg.fractions[fi];
        const int T_r = std::max(1, static_cast<int>(std::llround(frac * sched.T)));
        RelayConfig relay = make_relay_config(sched, T_r);

        TinyNetConfig arch;
        arch.in_channels = sr_items.front().z0.channels;
        arch.hidden_channels = cfg.hidden_channels;
        arch.mid_layers = cfg.mid_layers;
        arch.num_classes = kToyNumClasses;
        arch.time_steps = sched.T;
        arch.stage = Stage::super_resolution;
        Rng init_rng = seeder.fork(1000 + fi);
        TinyNet net = TinyNet::randomized(arch, init_rng);

        OptimizerConfig opt;
        opt.lr = cfg.lr;
        opt.epochs = cfg.epochs;
        opt.batch_size = cfg.batch_size;
        opt.seed = splitmix64(cfg.seed ^ (17 * (fi + 1)));
        opt.workers = cfg.workers;
        LossFn loss_fn =
            make_relay_loss_fn(net, sched, relay, cfg.cond_dropout, cfg.workers);
        train_loop(loss_fn, net.params(), sr_items, opt);

        auto net_ptr = std::make_shared<const TinyNet>(std::move(net));
        DenoiserPtr den = make_tiny_denoiser(net_ptr);
        SrEvalConfig ev = cfg.eval;
        ev.seed = splitmix64(cfg.seed ^ (23 * (fi + 1)));
        const SrEvalResult res = evaluate_sr(den, heldout, sched, relay, codec, ev);

        rows.push_back({frac, T_r, res.relay.mean_mse, res.baseline.mean_mse});
    }
    return rows;
}

void write_quality_csv(const std::string& path, const QualityReport& relay,
                       const QualityReport* baseline, std::uint64_t seed,
                       const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# seed=" << seed << " config=" << config_hash << "\n";
    out << "pair,mse,psnr";
    if (baseline) out << ",baseline_mse,baseline_psnr";
    out << "\n";
    for (std::size_t i = 0; i < relay.pairs.size(); ++i) {
        out << i << "," << relay.pairs[i].mse << "," << relay.pairs[i].psnr;
        if (baseline) {
            out << "," << baseline->pairs[i].mse << "," << baseline->pairs[i].psnr;
        }
        out << "\n";
    }
    out << "mean," << relay.mean_mse << "," << relay.mean_psnr;
    if (baseline) out << "," << baseline->mean_mse << "," << baseline->mean_psnr;
    out << "\n";
    out << "stderr_mse," << relay.stderr_mse;
    if (baseline) out << ",," << baseline->stderr_mse << ",";
    out << "\n";
}

void write_ablate_csv(const std::string& path, const std::vector<AblateRow>& rows,
                      std::uint64_t seed, const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "# seed=" << seed << " config=" << config_hash << "\n";
    out << "fraction,T_r,relay_mse,baseline_mse\n";
    for (const AblateRow& r : rows)
        out << r.fraction << "," << r.T_r << "," << r.relay_mse << ","
            << r.baseline_mse << "\n";
}

}  // namespace relaydiff

// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace relaydiff {

namespace {

ConditionId effective_cond(const TrainItem& item, const NoiseDraw& draw) {
    return draw.keep_cond ? item.cond : std::nullopt;
}

void require_zL(const TrainItem& item) {
    if (!item.zL.has_value())
        throw std::invalid_argument("relay batch item is missing its zL partner");
}

Grid relay_input(const TrainItem& item, const NoiseDraw& draw,
                 const NoiseSchedule& sched, const RelayConfig& relay) {
    require_zL(item);
    Grid blurred = blur_transition(item.z0, *item.zL, draw.t, relay.T_r);
    return axpy(blurred, sched.at(draw.t), draw.eps);
}

Grid base_input(const TrainItem& item, const NoiseDraw& draw,
                const NoiseSchedule& sched) {
    return axpy(item.z0, sched.at(draw.t), draw.eps);
}

// Batch-parallel loss+grad with a fixed-order reduction: per-item gradients
// land in per-item buffers and are summed sequentially, so results are
// bitwise identical for any worker count.
LossGrad loss_grad_impl(const TinyNet& net, std::span<const TrainItem> batch,
                        std::span<const NoiseDraw> draws,
                        const std::function<Grid(std::size_t)>& make_input,
                        int workers) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (draws.size() != batch.size())
        throw std::invalid_argument("draws/batch length mismatch");

    const std::size_t n = batch.size();
    std::vector<double> item_loss(n, 0.0);
    std::vector<std::vector<double>> item_grad(n);

    auto run_item = [&](std::size_t i) {
        const TrainItem& item = batch[i];
        const NoiseDraw& draw = draws[i];
        Grid input = make_input(i);
        TinyNet::Tape tape;
        Grid pred = net.forward_tape(input, draw.t, effective_cond(item, draw),
                                     std::nullopt, tape);
        Grid dout(pred.channels, pred.height, pred.width);
        double loss = 0.0;
        const double scale = 2.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < pred.data.size(); ++j) {
            const double diff = pred.data[j] - item.z0.data[j];
            loss += diff * diff;
            dout.data[j] = scale * diff;
        }
        item_loss[i] = loss;
        item_grad[i].assign(net.params().size(), 0.0);
        net.backward(tape, dout, item_grad[i]);
    };

    const int nw = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (nw == 1) {
        for (std::size_t i = 0; i < n; ++i) run_item(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        for (int t = 0; t < nw; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= n) return;
                        i = next++;
                    }
                    run_item(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    LossGrad out;
    out.grad.assign(net.params().size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.loss += item_loss[i];
        for (std::size_t j = 0; j < out.grad.size(); ++j)
            out.grad[j] += item_grad[i][j];
    }
    out.loss /= static_cast<double>(n);
    return out;
}

}  // namespace

std::vector<NoiseDraw> make_base_draws(std::span<const TrainItem> batch,
                                       const NoiseSchedule& sched, Rng& rng,
                                       double cond_dropout,
                                       std::optional<int> force_t) {
    std::vector<NoiseDraw> draws;
    draws.reserve(batch.size());
    for (const TrainItem& item : batch) {
        NoiseDraw d;
        d.t = force_t.value_or(1 + static_cast<int>(rng.uniform_index(sched.T)));
        d.eps = randn_like(item.z0, rng);
        d.keep_cond = !(cond_dropout > 0.0 && rng.uniform() < cond_dropout);
        draws.push_back(std::move(d));
    }
    return draws;
}

std::vector<NoiseDraw> make_relay_draws(std::span<const TrainItem> batch,
                                        const NoiseSchedule& sched,
                                        const RelayConfig& relay, Rng& rng,
                                        double cond_dropout,
                                        std::optional<int> force_t) {
    (void)sched;
    std::vector<NoiseDraw> draws;
    draws.reserve(batch.size());
    for (const TrainItem& item : batch) {
        NoiseDraw d;
        d.t = force_t.value_or(static_cast<int>(rng.uniform_index(relay.T_r + 1)));
        d.eps = randn_like(item.z0, rng);
        d.keep_cond = !(cond_dropout > 0.0 && rng.uniform() < cond_dropout);
        draws.push_back(std::move(d));
    }
    return draws;
}

double base_loss(const Denoiser& denoiser, std::span<const TrainItem> batch,
                 const NoiseSchedule& sched, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const std::vector<NoiseDraw> draws = make_base_draws(batch, sched, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Grid input = base_input(batch[i], draws[i], sched);
        Grid pred = denoiser.predict(input, draws[i].t, batch[i].cond, std::nullopt);
        total += squared_norm(pred - batch[i].z0);
    }
    return total / static_cast<double>(batch.size());
}

double relay_loss(const Denoiser& denoiser, std::span<const TrainItem> batch,
                  const NoiseSchedule& sched, const RelayConfig& relay,
                  Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const std::vector<NoiseDraw> draws = make_relay_draws(batch, sched, relay, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Grid input = relay_input(batch[i], draws[i], sched, relay);
        Grid pred = denoiser.predict(input, draws[i].t, batch[i].cond, std::nullopt);
        total += squared_norm(pred - batch[i].z0);
    }
    return total / static_cast<double>(batch.size());
}

double base_loss_frozen(const TinyNet& net, std::span<const TrainItem> batch,
                        const NoiseSchedule& sched,
                        std::span<const NoiseDraw> draws) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Grid input = base_input(batch[i], draws[i], sched);
        Grid pred = net.forward(input, draws[i].t,
                                effective_cond(batch[i], draws[i]), std::nullopt);
        total += squared_norm(pred - batch[i].z0);
    }
    return total / static_cast<double>(batch.size());
}

double relay_loss_frozen(const TinyNet& net, std::span<const TrainItem> batch,
                         const NoiseSchedule& sched, const RelayConfig& relay,
                         std::span<const NoiseDraw> draws) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Grid input = relay_input(batch[i], draws[i], sched, relay);
        Grid pred = net.forward(input, draws[i].t,
                                effective_cond(batch[i], draws[i]), std::nullopt);
        total += squared_norm(pred - batch[i].z0);
    }
    return total / static_cast<double>(batch.size());
}

LossGrad base_loss_grad(const TinyNet& net, std::span<const TrainItem> batch,
                        const NoiseSchedule& sched,
                        std::span<const NoiseDraw> draws, int workers) {
    return loss_grad_impl(
        net, batch, draws,
        [&](std::size_t i) { return base_input(batch[i], draws[i], sched); },
        workers);
}

LossGrad relay_loss_grad(const TinyNet& net, std::span<const TrainItem> batch,
                         const NoiseSchedule& sched, const RelayConfig& relay,
                         std::span<const NoiseDraw> draws, int workers) {
    for (const TrainItem& item : batch) require_zL(item);
    return loss_grad_impl(
        net, batch, draws,
        [&](std::size_t i) { return relay_input(batch[i], draws[i], sched, relay); },
        workers);
}

LossFn make_base_loss_fn(TinyNet& net, const NoiseSchedule& sched,
                         double cond_dropout, int workers) {
    return [&net, &sched, cond_dropout, workers](
               const std::vector<double>& params,
               std::span<const TrainItem> batch, Rng& rng) {
        if (&params != &net.params()) net.params() = params;
        const std::vector<NoiseDraw> draws =
            make_base_draws(batch, sched, rng, cond_dropout);
        return base_loss_grad(net, batch, sched, draws, workers);
    };
}

LossFn make_relay_loss_fn(TinyNet& net, const NoiseSchedule& sched,
                          const RelayConfig& relay, double cond_dropout,
                          int workers) {
    return [&net, &sched, &relay, cond_dropout, workers](
               const std::vector<double>& params,
               std::span<const TrainItem> batch, Rng& rng) {
        if (&params != &net.params()) net.params() = params;
        const std::vector<NoiseDraw> draws =
            make_relay_draws(batch, sched, relay, rng, cond_dropout);
        return relay_loss_grad(net, batch, sched, relay, draws, workers);
    };
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("Adam size mismatch");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, step_);
    const double bc2 = 1.0 - std::pow(beta2_, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

TrainMetrics train_loop(const LossFn& loss_fn, std::vector<double>& params,
                        const std::vector<TrainItem>& dataset,
                        const OptimizerConfig& opt) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    if (opt.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

    Rng rng(opt.seed);
    Adam adam(params.size(), opt.lr, opt.beta1, opt.beta2, opt.eps);
    TrainMetrics metrics;

    std::ofstream csv;
    if (!opt.metrics_csv.empty()) {
        csv.open(opt.metrics_csv);
        if (!csv) throw std::runtime_error("cannot open " + opt.metrics_csv);
        csv << "epoch,loss,wall_time\n";
    }

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> last_finite = params;

    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        // Seeded Fisher-Yates shuffle.
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j = rng.uniform_index(i + 1);
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        int batches = 0;
        std::vector<TrainItem> batch;
        for (std::size_t pos = 0; pos < order.size(); pos += opt.batch_size) {
            batch.clear();
            const std::size_t end =
                std::min(order.size(), pos + static_cast<std::size_t>(opt.batch_size));
            for (std::size_t k = pos; k < end; ++k) batch.push_back(dataset[order[k]]);

            LossGrad lg = loss_fn(params, batch, rng);
            if (!std::isfinite(lg.loss)) {
                if (opt.on_divergence_checkpoint) opt.on_divergence_checkpoint(last_finite);
                params = last_finite;
                throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch));
            }
            last_finite = params;
            adam.step(params, lg.grad);
            epoch_loss += lg.loss;
            ++batches;
        }
        epoch_loss /= std::max(1, batches);
        metrics.epoch_loss.push_back(epoch_loss);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                .count();
        if (csv) csv << epoch << "," << epoch_loss << "," << wall << "\n";
    }
    metrics.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return metrics;
}

}  // namespace relaydiff

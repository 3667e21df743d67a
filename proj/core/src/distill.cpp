// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/distill.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace relaydiff {

namespace {

void check_nodes(int t_hi, int t_mid, int t_lo) {
    if (!(t_hi > t_mid && t_mid > t_lo && t_lo >= 0))
        throw std::out_of_range("distill nodes must satisfy t_hi > t_mid > t_lo >= 0");
}

Grid relay_jump(const Grid& z, const Grid& pred, const Grid& anchor, int t,
                int s, const NoiseSchedule& sched) {
    const RelayCoefficients k = relay_jump_coefficients(t, s, 0.0, sched);
    return lerp3(k.a, z, k.b, pred, k.c, anchor);
}

Grid advance_anchor(const Grid& anchor, const Grid& pred, int t, int s) {
    const double frac = static_cast<double>(t - s) / t;
    Grid next = anchor;
    for (std::size_t i = 0; i < next.data.size(); ++i)
        next.data[i] += (pred.data[i] - next.data[i]) * frac;
    return next;
}

}  // namespace

Grid distill_pair_target_nodes(const Denoiser& teacher, const Grid& z_t,
                               const Grid& anchor_t, int t_hi, int t_mid,
                               int t_lo, ConditionId cond,
                               std::optional<double> w,
                               const NoiseSchedule& sched) {
    check_nodes(t_hi, t_mid, t_lo);
    Grid pred1 = teacher.predict(z_t, t_hi, cond, w);
    Grid z_mid = relay_jump(z_t, pred1, anchor_t, t_hi, t_mid, sched);
    Grid anchor_mid = advance_anchor(anchor_t, pred1, t_hi, t_mid);
    Grid pred2 = teacher.predict(z_mid, t_mid, cond, w);
    return relay_jump(z_mid, pred2, anchor_mid, t_mid, t_lo, sched);
}

Grid distill_pair_target(const Denoiser& teacher, const Grid& z_t,
                         const Grid& anchor_t, int t, ConditionId cond,
                         std::optional<double> w, const NoiseSchedule& sched,
                         const RelayConfig& relay) {
    if (t < 2) throw std::out_of_range("teacher pair needs t >= 2");
    if (t > relay.T_r) throw std::out_of_range("teacher pair start beyond T_r");
    return distill_pair_target_nodes(teacher, z_t, anchor_t, t, t - 1, t - 2,
                                     cond, w, sched);
}

Grid student_step_update(const Grid& z_t, const Grid& anchor_t,
                         const Grid& z0_pred, int t_hi, int t_lo,
                         const NoiseSchedule& sched) {
    if (!(t_hi > t_lo && t_lo >= 0))
        throw std::out_of_range("student jump needs t_hi > t_lo >= 0");
    const RelayCoefficients k = relay_jump_coefficients(t_hi, t_lo, 0.0, sched);
    return lerp3(k.a, z_t, k.b, z0_pred, k.c, anchor_t);
}

Grid student_step(const Denoiser& student, const Grid& z_t, const Grid& anchor_t,
                  int t, ConditionId cond, std::optional<double> w,
                  const NoiseSchedule& sched, const RelayConfig& relay) {
    if (t < 2) throw std::out_of_range("student step needs t >= 2");
    if (t > relay.T_r) throw std::out_of_range("student step start beyond T_r");
    Grid pred = student.predict(z_t, t, cond, w);
    return student_step_update(z_t, anchor_t, pred, t, t - 2, sched);
}

Grid distill_pair_target_base_nodes(const Denoiser& teacher, const Grid& z_t,
                                    int t_hi, int t_mid, int t_lo,
                                    ConditionId cond, std::optional<double> w,
                                    const NoiseSchedule& sched) {
    check_nodes(t_hi, t_mid, t_lo);
    Grid pred1 = teacher.predict(z_t, t_hi, cond, w);
    const double r1 = sched.at(t_mid) / sched.at(t_hi);
    Grid z_mid = lerp2(r1, z_t, 1.0 - r1, pred1);
    Grid pred2 = teacher.predict(z_mid, t_mid, cond, w);
    const double r2 = sched.at(t_lo) / sched.at(t_mid);
    return lerp2(r2, z_mid, 1.0 - r2, pred2);
}

Grid student_step_update_base(const Grid& z_t, const Grid& z0_pred, int t_hi,
                              int t_lo, const NoiseSchedule& sched) {
    if (!(t_hi > t_lo && t_lo >= 0))
        throw std::out_of_range("student jump needs t_hi > t_lo >= 0");
    const double r = sched.at(t_lo) / sched.at(t_hi);
    return lerp2(r, z_t, 1.0 - r, z0_pred);
}

DistillResult progressive_distill(const TinyNet& teacher,
                                  const std::vector<TrainItem>& data,
                                  const NoiseSchedule& sched,
                                  const RelayConfig& relay,
                                  const DistillConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("empty distillation dataset");
    if (cfg.initial_steps < 2)
        throw std::out_of_range("distillation needs at least 2 initial steps");
    // Each round halves the step count; it must stay integral and >= 1.
    int steps = cfg.initial_steps;
    int max_rounds = 0;
    while (steps % 2 == 0) {
        steps /= 2;
        ++max_rounds;
    }
    if (cfg.rounds < 0 || cfg.rounds > max_rounds)
        throw std::out_of_range("rounds exceed log2(initial steps)");

    const bool sr = cfg.stage == Stage::super_resolution;
    const int t_start = sr ? relay.T_r : sched.T;

    DistillResult result{teacher, {}, {}};
    result.student.mutable_config().stage = cfg.stage;
    if (cfg.rounds == 0) return result;

    std::ofstream csv;
    if (!cfg.metrics_csv.empty()) {
        csv.open(cfg.metrics_csv);
        if (!csv) throw std::runtime_error("cannot open " + cfg.metrics_csv);
        csv << "round,iter,loss\n";
    }

    Rng rng(cfg.seed);
    int teacher_steps = cfg.initial_steps;

    for (int round = 0; round < cfg.rounds; ++round) {
        // Teacher for this round: the original net behind sampled-strength
        // guidance in round 1, the previous student (conditioning on w
        // directly) afterwards.
        auto teacher_net = std::make_shared<const TinyNet>(result.student);
        DenoiserPtr teacher_den = make_tiny_denoiser(teacher_net);

        TinyNet student = result.student;
        student.mutable_config().w_conditioned = true;
        Adam adam(student.params().size(), cfg.lr);

        const std::vector<int> nodes = make_step_grid(t_start, teacher_steps);
        const int student_jumps = teacher_steps / 2;

        double last_loss = 0.0;
        std::vector<TrainItem> batch;
        std::vector<double> grad(student.params().size(), 0.0);
        for (int iter = 0; iter < cfg.iters_per_round; ++iter) {
            batch.clear();
            for (int b = 0; b < cfg.batch_size; ++b)
                batch.push_back(data[rng.uniform_index(data.size())]);

            std::fill(grad.begin(), grad.end(), 0.0);
            double loss = 0.0;
            for (const TrainItem& item : batch) {
                const int j = static_cast<int>(rng.uniform_index(student_jumps));
                const int t_hi = nodes[2 * j];
                const int t_mid = nodes[2 * j + 1];
                const int t_lo = nodes[2 * j + 2];
                const double w = rng.uniform(cfg.w_min, cfg.w_max);

                Grid eps = randn_like(item.z0, rng);
                Grid z_t, anchor, target;
                if (sr) {
                    if (!item.zL.has_value())
                        throw std::invalid_argument("SR distillation item missing zL");
                    anchor = blur_transition(item.z0, *item.zL, t_hi, relay.T_r);
                    z_t = axpy(anchor, sched.at(t_hi), eps);
                    if (round == 0) {
                        // Guidance-wrapped teacher; the student absorbs w.
                        DenoiserPtr guided = with_guidance(teacher_den, w);
                        target = distill_pair_target_nodes(*guided, z_t, anchor, t_hi,
                                                           t_mid, t_lo, item.cond,
                                                           std::nullopt, sched);
                    } else {
                        target = distill_pair_target_nodes(*teacher_den, z_t, anchor,
                                                           t_hi, t_mid, t_lo,
                                                           item.cond, w, sched);
                    }
                } else {
                    z_t = axpy(item.z0, sched.at(t_hi), eps);
                    if (round == 0) {
                        DenoiserPtr guided = with_guidance(teacher_den, w);
                        target = distill_pair_target_base_nodes(*guided, z_t, t_hi,
                                                                t_mid, t_lo, item.cond,
                                                                std::nullopt, sched);
                    } else {
                        target = distill_pair_target_base_nodes(*teacher_den, z_t, t_hi,
                                                                t_mid, t_lo, item.cond,
                                                                w, sched);
                    }
                }

                TinyNet::Tape tape;
                Grid pred = student.forward_tape(z_t, t_hi, item.cond, w, tape);
                Grid merged = sr ? student_step_update(z_t, anchor, pred, t_hi, t_lo, sched)
                                 : student_step_update_base(z_t, pred, t_hi, t_lo, sched);

                // d(loss)/d(pred) = b * 2 (merged - target) / batch
                const double b_coeff =
                    static_cast<double>(t_hi - t_lo) / static_cast<double>(t_hi);
                Grid dout(pred.channels, pred.height, pred.width);
                const double scale = 2.0 * b_coeff / cfg.batch_size;
                for (std::size_t i = 0; i < merged.data.size(); ++i) {
                    const double diff = merged.data[i] - target.data[i];
                    loss += diff * diff;
                    dout.data[i] = scale * diff;
                }
                student.backward(tape, dout, grad);
            }
            loss /= cfg.batch_size;
            if (!std::isfinite(loss))
                throw std::runtime_error("distillation diverged at round " +
                                         std::to_string(round));
            adam.step(student.params(), grad);
            last_loss = loss;
            if (csv && (iter % 25 == 0 || iter + 1 == cfg.iters_per_round))
                csv << round << "," << iter << "," << loss << "\n";
        }

        result.student = std::move(student);
        teacher_steps /= 2;
        result.round_final_loss.push_back(last_loss);
        result.step_schedule.push_back(teacher_steps);
    }
    return result;
}

}  // namespace relaydiff

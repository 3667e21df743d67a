// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/config.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace relaydiff {

namespace {

// Reads known keys with defaults and rejects unknown ones.
class Section {
public:
    Section(const nlohmann::json& j, std::string name) : name_(std::move(name)) {
        if (j.contains(name_)) {
            if (!j.at(name_).is_object())
                throw std::invalid_argument("config section '" + name_ +
                                            "' must be an object");
            obj_ = j.at(name_);
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (obj_.contains(key)) {
            out = obj_.at(key).get<T>();
            seen_.push_back(key);
        }
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            bool known = false;
            for (const std::string& s : seen_)
                if (s == it.key()) known = true;
            if (!known)
                throw std::invalid_argument("unknown config key '" + name_ + "." +
                                            it.key() + "'");
        }
    }

private:
    std::string name_;
    nlohmann::json obj_ = nlohmann::json::object();
    std::vector<std::string> seen_;
};

}  // namespace

DeltaProfile parse_delta_rule(const std::string& rule) {
    DeltaProfile p;
    if (rule == "zero" || rule.empty()) return p;
    const std::string prefix = "sigma_prev_scale:";
    if (rule.rfind(prefix, 0) == 0) {
        p.kind = DeltaProfile::Kind::sigma_prev_scale;
        p.scale = std::stod(rule.substr(prefix.size()));
        return p;
    }
    throw std::invalid_argument("unknown delta rule: " + rule);
}

nlohmann::json RunConfig::to_json() const {
    return nlohmann::json{
        {"schedule",
         {{"rule", schedule.rule},
          {"T", schedule.T},
          {"sigma_max", schedule.sigma_max},
          {"T_r", schedule.T_r},
          {"delta_rule", schedule.delta_rule}}},
        {"sampler",
         {{"base_steps", sampler.base_steps},
          {"sr_steps", sampler.sr_steps},
          {"w_base", sampler.w_base},
          {"w_sr", sampler.w_sr},
          {"delta_profile", sampler.delta_profile},
          {"tile", {{"h", sampler.tile_h},
                    {"w", sampler.tile_w},
                    {"overlap", sampler.tile_overlap},
                    {"blend", sampler.tile_blend}}}}},
        {"pipeline",
         {{"base_resolution", pipeline.base_resolution},
          {"image_channels", pipeline.image_channels},
          {"hops", pipeline.hops},
          {"codec_factor", pipeline.codec_factor},
          {"tile_threshold_cells", pipeline.tile_threshold_cells},
          {"tiling_enabled", pipeline.tiling_enabled}}},
        {"dataset",
         {{"size", dataset.size},
          {"train_items", dataset.train_items},
          {"heldout_items", dataset.heldout_items},
          {"seed", dataset.seed},
          {"path", dataset.path}}},
        {"training",
         {{"stage", training.stage},
          {"epochs", training.epochs},
          {"batch_size", training.batch_size},
          {"lr", training.lr},
          {"seed", training.seed},
          {"hidden_channels", training.hidden_channels},
          {"mid_layers", training.mid_layers},
          {"cond_dropout", training.cond_dropout}}},
        {"distill",
         {{"stage", distill.stage},
          {"initial_steps", distill.initial_steps},
          {"rounds", distill.rounds},
          {"w_min", distill.w_min},
          {"w_max", distill.w_max},
          {"iters_per_round", distill.iters_per_round},
          {"batch_size", distill.batch_size},
          {"lr", distill.lr},
          {"seed", distill.seed},
          {"teacher", distill.teacher}}},
        {"eval",
         {{"sr_steps", eval.sr_steps},
          {"w", eval.w},
          {"corruption_amp", eval.corruption_amp},
          {"ablate_fractions", eval.ablate_fractions},
          {"ablate_epochs", eval.ablate_epochs},
          {"seed", eval.seed}}},
        {"expansion",
         {{"enabled", expansion.enabled},
          {"host", expansion.host},
          {"port", expansion.port},
          {"path", expansion.path},
          {"model", expansion.model},
          {"timeout_ms", expansion.timeout_ms},
          {"retries", expansion.retries},
          {"backoff_ms", expansion.backoff_ms},
          {"fallback", expansion.fallback},
          {"token_env", expansion.token_env},
          {"max_in_flight", expansion.max_in_flight}}},
        {"prompt", prompt},
        {"run",
         {{"seed", run.seed},
          {"workers", run.workers},
          {"deterministic", run.deterministic},
          {"out_dir", run.out_dir},
          {"base_checkpoint", run.base_checkpoint},
          {"sr_checkpoint", run.sr_checkpoint},
          {"denoisers", run.denoisers},
          {"conditions", run.conditions}}},
    };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config root must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "schedule" && k != "sampler" && k != "pipeline" && k != "dataset" &&
            k != "training" && k != "distill" && k != "eval" && k != "expansion" &&
            k != "prompt" && k != "run")
            throw std::invalid_argument("unknown config section '" + k + "'");
    }
    RunConfig c;
    {
        Section s(j, "schedule");
        s.get("rule", c.schedule.rule);
        s.get("T", c.schedule.T);
        s.get("sigma_max", c.schedule.sigma_max);
        s.get("T_r", c.schedule.T_r);
        s.get("delta_rule", c.schedule.delta_rule);
        s.finish();
    }
    {
        Section s(j, "sampler");
        s.get("base_steps", c.sampler.base_steps);
        s.get("sr_steps", c.sampler.sr_steps);
        s.get("w_base", c.sampler.w_base);
        s.get("w_sr", c.sampler.w_sr);
        s.get("delta_profile", c.sampler.delta_profile);
        if (j.contains("sampler") && j.at("sampler").contains("tile")) {
            const auto& t = j.at("sampler").at("tile");
            c.sampler.tile_h = t.value("h", c.sampler.tile_h);
            c.sampler.tile_w = t.value("w", c.sampler.tile_w);
            c.sampler.tile_overlap = t.value("overlap", c.sampler.tile_overlap);
            c.sampler.tile_blend = t.value("blend", c.sampler.tile_blend);
        }
        // "tile" handled above; record it as seen
        nlohmann::json dummy;
        (void)dummy;
        s.get("tile", dummy);
        s.finish();
    }
    {
        Section s(j, "pipeline");
        s.get("base_resolution", c.pipeline.base_resolution);
        s.get("image_channels", c.pipeline.image_channels);
        s.get("hops", c.pipeline.hops);
        s.get("codec_factor", c.pipeline.codec_factor);
        s.get("tile_threshold_cells", c.pipeline.tile_threshold_cells);
        s.get("tiling_enabled", c.pipeline.tiling_enabled);
        s.finish();
    }
    {
        Section s(j, "dataset");
        s.get("size", c.dataset.size);
        s.get("train_items", c.dataset.train_items);
        s.get("heldout_items", c.dataset.heldout_items);
        s.get("seed", c.dataset.seed);
        s.get("path", c.dataset.path);
        s.finish();
    }
    {
        Section s(j, "training");
        s.get("stage", c.training.stage);
        s.get("epochs", c.training.epochs);
        s.get("batch_size", c.training.batch_size);
        s.get("lr", c.training.lr);
        s.get("seed", c.training.seed);
        s.get("hidden_channels", c.training.hidden_channels);
        s.get("mid_layers", c.training.mid_layers);
        s.get("cond_dropout", c.training.cond_dropout);
        s.finish();
    }
    {
        Section s(j, "distill");
        s.get("stage", c.distill.stage);
        s.get("initial_steps", c.distill.initial_steps);
        s.get("rounds", c.distill.rounds);
        s.get("w_min", c.distill.w_min);
        s.get("w_max", c.distill.w_max);
        s.get("iters_per_round", c.distill.iters_per_round);
        s.get("batch_size", c.distill.batch_size);
        s.get("lr", c.distill.lr);
        s.get("seed", c.distill.seed);
        s.get("teacher", c.distill.teacher);
        s.finish();
    }
    {
        Section s(j, "eval");
        s.get("sr_steps", c.eval.sr_steps);
        s.get("w", c.eval.w);
        s.get("corruption_amp", c.eval.corruption_amp);
        s.get("ablate_fractions", c.eval.ablate_fractions);
        s.get("ablate_epochs", c.eval.ablate_epochs);
        s.get("seed", c.eval.seed);
        s.finish();
    }
    {
        Section s(j, "expansion");
        s.get("enabled", c.expansion.enabled);
        s.get("host", c.expansion.host);
        s.get("port", c.expansion.port);
        s.get("path", c.expansion.path);
        s.get("model", c.expansion.model);
        s.get("timeout_ms", c.expansion.timeout_ms);
        s.get("retries", c.expansion.retries);
        s.get("backoff_ms", c.expansion.backoff_ms);
        s.get("fallback", c.expansion.fallback);
        s.get("token_env", c.expansion.token_env);
        s.get("max_in_flight", c.expansion.max_in_flight);
        s.finish();
    }
    if (j.contains("prompt")) c.prompt = j.at("prompt").get<std::string>();
    {
        Section s(j, "run");
        s.get("seed", c.run.seed);
        s.get("workers", c.run.workers);
        s.get("deterministic", c.run.deterministic);
        s.get("out_dir", c.run.out_dir);
        s.get("base_checkpoint", c.run.base_checkpoint);
        s.get("sr_checkpoint", c.run.sr_checkpoint);
        s.get("denoisers", c.run.denoisers);
        s.get("conditions", c.run.conditions);
        s.finish();
    }
    return c;
}

NoiseSchedule RunConfig::make_schedule() const {
    return make_noise_schedule(schedule_rule_from_string(schedule.rule), schedule.T,
                               schedule.sigma_max);
}

RelayConfig RunConfig::make_relay(const NoiseSchedule& sched) const {
    return make_relay_config(sched, schedule.T_r, parse_delta_rule(schedule.delta_rule));
}

DeltaProfile RunConfig::sampler_delta_profile() const {
    return parse_delta_rule(sampler.delta_profile);
}

TileConfig RunConfig::tile_config() const {
    TileConfig t;
    t.tile_height = sampler.tile_h;
    t.tile_width = sampler.tile_w;
    t.overlap = sampler.tile_overlap;
    t.blend = tile_blend_from_string(sampler.tile_blend);
    return t;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    // Accept a run manifest and reuse its embedded config.
    if (j.contains("manifest_version") && j.contains("config")) j = j.at("config");
    return RunConfig::from_json(j);
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like path.to.key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    nlohmann::json* node = &config;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot - pos);
        if (key.empty()) throw std::invalid_argument("bad override path: " + path);
        if (dot == std::string::npos) {
            nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

std::string config_hash(const nlohmann::json& config) {
    const std::string s = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace relaydiff

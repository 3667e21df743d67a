// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "relaydiff/config.hpp"
#include "relaydiff/version.hpp"

namespace relaydiff {

RunManifest::RunManifest(std::string command, nlohmann::json config,
                         std::uint64_t seed) {
    hash_ = config_hash(config);
    doc_ = nlohmann::json{
        {"manifest_version", 1},
        {"command", std::move(command)},
        {"config", std::move(config)},
        {"config_hash", hash_},
        {"seed", seed},
        {"versions", {{"relaydiff", RELAYDIFF_VERSION}}},
        {"timings_ms", nlohmann::json::object()},
        {"outputs", nlohmann::json::array()},
    };
}

void RunManifest::add_timing(const std::string& stage, double ms) {
    doc_["timings_ms"][stage] = ms;
}

void RunManifest::add_timings(const std::vector<StageTiming>& timings) {
    for (const StageTiming& t : timings) add_timing(t.stage, t.ms);
}

void RunManifest::add_output(const std::string& path) {
    doc_["outputs"].push_back(path);
}

void RunManifest::set(const std::string& key, const nlohmann::json& value) {
    doc_[key] = value;
}

nlohmann::json RunManifest::to_json() const { return doc_; }

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << doc_.dump(2) << "\n";
}

std::string make_run_dir(const std::string& explicit_dir, const std::string& hash) {
    std::string dir = explicit_dir;
    if (dir.empty()) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        std::tm tm_utc;
        gmtime_r(&tt, &tm_utc);
        char stamp[32];
        std::snprintf(stamp, sizeof(stamp), "%04d%02d%02dT%02d%02d%02d",
                      tm_utc.tm_year + 1900, tm_utc.tm_mon + 1, tm_utc.tm_mday,
                      tm_utc.tm_hour, tm_utc.tm_min, tm_utc.tm_sec);
        dir = std::string("runs/") + stamp + "-" + hash.substr(0, 8);
    }
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace relaydiff

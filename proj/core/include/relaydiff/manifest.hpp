// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relaydiff/pipeline.hpp"

namespace relaydiff {

/// Every CLI run writes one manifest: command, full config (so the run can be
/// reproduced by pointing --config at the manifest), config hash, seed,
/// versions, timings, and produced artifacts.
class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json config, std::uint64_t seed);

    void add_timing(const std::string& stage, double ms);
    void add_timings(const std::vector<StageTiming>& timings);
    void add_output(const std::string& path);
    void set(const std::string& key, const nlohmann::json& value);

    const std::string& hash() const { return hash_; }
    nlohmann::json to_json() const;
    void write(const std::string& path) const;

private:
    nlohmann::json doc_;
    std::string hash_;
};

/// runs/<timestamp>-<hash prefix>, created; or the explicit override.
std::string make_run_dir(const std::string& explicit_dir, const std::string& hash);

}  // namespace relaydiff

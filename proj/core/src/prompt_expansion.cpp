// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#include "relaydiff/prompt_expansion.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <semaphore>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace relaydiff {

struct PromptExpander::Impl {
    ExpansionConfig cfg;
    mutable std::counting_semaphore<256> in_flight;

    explicit Impl(ExpansionConfig c)
        : cfg(std::move(c)),
          in_flight(std::max(1, std::min(cfg.max_in_flight, 256))) {}
};

PromptExpander::PromptExpander(ExpansionConfig cfg)
    : impl_(new Impl(std::move(cfg))) {}

PromptExpander::~PromptExpander() { delete impl_; }

std::string PromptExpander::system_instruction() {
    return "You expand short image prompts into comprehensive, detailed "
           "descriptions while preserving the user's original intention. "
           "Reply with the expanded description only.";
}

std::string PromptExpander::user_message(const std::string& prompt) {
    return "Original caption: " + prompt +
           ". Can you provide a more comprehensive description of the image?";
}

std::string PromptExpander::expand(const std::string& prompt) const {
    const ExpansionConfig& cfg = impl_->cfg;
    if (!cfg.enabled) return prompt;

    impl_->in_flight.acquire();
    struct Release {
        Impl* impl;
        ~Release() { impl->in_flight.release(); }
    } release{impl_};

    const nlohmann::json body = {
        {"model", cfg.model},
        {"messages",
         {{{"role", "system"}, {"content", system_instruction()}},
          {{"role", "user"}, {"content", user_message(prompt)}}}},
    };

    std::string last_error;
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(cfg.backoff_ms * attempt));
        }
        httplib::Client client(cfg.host, cfg.port);
        client.set_connection_timeout(0, cfg.timeout_ms * 1000);
        client.set_read_timeout(0, cfg.timeout_ms * 1000);
        httplib::Headers headers;
        if (const char* token = std::getenv(cfg.token_env.c_str());
            token && *token) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
        auto res = client.Post(cfg.path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "network error: " + httplib::to_string(res.error());
            continue;  // retriable
        }
        if (res->status >= 500) {
            last_error = "server error: HTTP " + std::to_string(res->status);
            continue;  // retriable
        }
        if (res->status != 200) {
            last_error = "protocol error: HTTP " + std::to_string(res->status);
            break;  // not retriable
        }
        try {
            const nlohmann::json reply = nlohmann::json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content")
                .get<std::string>();
        } catch (const std::exception& e) {
            last_error = std::string("protocol error: malformed response: ") + e.what();
            break;
        }
    }

    if (cfg.fallback) return prompt;
    throw std::runtime_error("prompt expansion failed: " + last_error);
}

}  // namespace relaydiff

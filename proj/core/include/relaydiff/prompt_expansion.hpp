// Copyright (c) 2026 relaydiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace relaydiff {

/// Client settings for the chat-completion-style expansion endpoint. The
/// bearer token, if any, is read from the environment variable named by
/// token_env (never from config files).
struct ExpansionConfig {
    bool enabled = false;
    std::string host = "127.0.0.1";
    int port = 8089;
    std::string path = "/v1/chat/completions";
    std::string model = "prompt-expander";
    int timeout_ms = 3000;
    int retries = 2;
    int backoff_ms = 200;
    bool fallback = true;  // degrade to identity instead of throwing
    std::string token_env = "RELAY_EXPANSION_TOKEN";
    int max_in_flight = 4;
};

/// Expands short prompts into comprehensive descriptions via an external
/// service. Failures never propagate into generation when fallback is on:
/// the original prompt is returned unchanged.
class PromptExpander {
public:
    explicit PromptExpander(ExpansionConfig cfg);
    ~PromptExpander();

    PromptExpander(const PromptExpander&) = delete;
    PromptExpander& operator=(const PromptExpander&) = delete;

    std::string expand(const std::string& prompt) const;

    /// Instruction preamble sent as the system message.
    static std::string system_instruction();
    /// User message wrapping the original prompt verbatim.
    static std::string user_message(const std::string& prompt);

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace relaydiff

#pragma once

#include "etd/prompter.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace etd {

// The determining LLM sits behind this config: a real chat-completion
// endpoint or a deterministic in-process mock for tests and offline runs.
struct GatewayConfig {
    std::string backend = "mock"; // "http" | "mock"

    // http backend
    std::string endpoint; // e.g. http://localhost:8080/v1/chat/completions
    std::string model;
    std::string auth_env;          // name of the env var holding the bearer token; empty = none
    double timeout_seconds = 30.0; // per attempt
    int max_retries = 2;           // connection failures only
    double temperature = 0.0;

    // mock backend policies:
    //   "always-<L>"  fixed response naming label L
    //   "fixture"     replay by prompt fingerprint from `fixtures`
    //   "gold"        pick the offered label whose name is a gold answer
    //   "empty"       empty response (exercises the fallback path)
    std::string mock_policy = "always-A";
    std::unordered_map<uint64_t, std::string> fixtures;
    std::unordered_map<std::string, std::vector<std::string>> gold_answers; // question -> names
};

struct Determination {
    std::string raw_text;
    uint32_t chosen = 0;     // entity id of the picked candidate
    size_t chosen_index = 0; // index into the offered list
    std::string method;      // "label" | "name-match" | "fallback-top1"
};

// Stable key for recorded mock responses.
uint64_t prompt_fingerprint(const PromptBundle& prompt);

// One chat completion: system message = task description, user message =
// body. Throws ConfigError on bad config, TransportError on network failure
// (after retries) or a non-2xx status.
std::string complete(const GatewayConfig& config, const PromptBundle& prompt);

// Label token first, then case-insensitive longest-name substring, then the
// top-probability candidate. Total: always returns a determination.
Determination parse_answer(const std::string& raw, const std::vector<CandidateOffer>& offered);

// complete + parse_answer.
Determination determine(const GatewayConfig& config, const PromptBundle& prompt);

// Lowercase, whitespace-trimmed surface form used for answer matching.
std::string normalize_answer(std::string_view text);

} // namespace etd

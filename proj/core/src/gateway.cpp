#include "etd/gateway.hpp"

#include "etd/errors.hpp"
#include "etd/rng.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace etd {

std::string normalize_answer(std::string_view text) {
    size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    std::string out;
    out.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    }
    return out;
}

uint64_t prompt_fingerprint(const PromptBundle& prompt) { return fnv1a64(prompt.full_text()); }

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// "Question: ..." line of the prompt body; empty when absent.
std::string question_of(const PromptBundle& prompt) {
    const std::string_view prefix = "Question: ";
    if (prompt.body.rfind(prefix, 0) != 0) return "";
    const size_t eol = prompt.body.find('\n', prefix.size());
    return prompt.body.substr(prefix.size(),
                              eol == std::string::npos ? std::string::npos : eol - prefix.size());
}

std::string mock_response(const GatewayConfig& config, const PromptBundle& prompt) {
    const std::string& policy = config.mock_policy;
    if (policy.rfind("always-", 0) == 0 && policy.size() == 8 && policy[7] >= 'A' && policy[7] <= 'Z') {
        return std::string("The correct answer is ") + policy[7] + ".";
    }
    if (policy == "fixture") {
        const auto it = config.fixtures.find(prompt_fingerprint(prompt));
        if (it == config.fixtures.end()) {
            throw DataError("mock gateway has no recorded response for this prompt");
        }
        return it->second;
    }
    if (policy == "gold") {
        const auto it = config.gold_answers.find(question_of(prompt));
        if (it != config.gold_answers.end()) {
            std::vector<std::string> gold;
            gold.reserve(it->second.size());
            for (const std::string& g : it->second) gold.push_back(normalize_answer(g));
            for (size_t i = 0; i < prompt.offered.size(); ++i) {
                const std::string name = normalize_answer(prompt.offered[i].name);
                if (std::find(gold.begin(), gold.end(), name) != gold.end()) {
                    return std::string("The correct answer is ") + static_cast<char>('A' + i) + ". " +
                           prompt.offered[i].name + ".";
                }
            }
        }
        return "None of the reference answers matches my knowledge, and I cannot tell.";
    }
    if (policy == "empty") return "";
    throw ConfigError("unknown mock policy: " + policy);
}

// "http://host:port/path" -> base + path for the client.
void split_endpoint(const std::string& endpoint, std::string& base, std::string& path) {
    const size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint must include a scheme: " + endpoint);
    const size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base = endpoint;
        path = "/";
    } else {
        base = endpoint.substr(0, slash);
        path = endpoint.substr(slash);
    }
}

std::string http_response(const GatewayConfig& config, const PromptBundle& prompt) {
    if (config.endpoint.empty() || config.model.empty()) {
        throw ConfigError("http gateway requires endpoint and model");
    }
    if (config.timeout_seconds <= 0.0) throw ConfigError("gateway timeout must be positive");

    std::string token;
    if (!config.auth_env.empty()) {
        const char* value = std::getenv(config.auth_env.c_str());
        if (!value || !*value) {
            throw ConfigError("auth environment variable is not set: " + config.auth_env);
        }
        token = value;
    }

    std::string base, path;
    split_endpoint(config.endpoint, base, path);

    const nlohmann::json payload = {
        {"model", config.model},
        {"temperature", config.temperature},
        {"messages",
         {{{"role", "system"}, {"content", prompt.task_description}},
          {{"role", "user"}, {"content", prompt.body}}}},
    };
    const std::string body = payload.dump();

    httplib::Client client(base);
    const auto timeout = std::chrono::milliseconds(static_cast<long>(config.timeout_seconds * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    httplib::Result res;
    for (int attempt = 0;; ++attempt) {
        res = client.Post(path, headers, body, "application/json");
        if (res) break;
        if (attempt >= config.max_retries) {
            throw TransportError("chat endpoint unreachable after " + std::to_string(attempt + 1) +
                                 " attempts: " + httplib::to_string(res.error()));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100L << attempt));
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("chat endpoint returned status " + std::to_string(res->status));
    }

    try {
        const nlohmann::json reply = nlohmann::json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed chat response: ") + e.what());
    }
}

} // namespace

std::string complete(const GatewayConfig& config, const PromptBundle& prompt) {
    if (prompt.body.empty()) throw std::invalid_argument("complete: empty prompt");
    if (config.backend == "mock") return mock_response(config, prompt);
    if (config.backend == "http") return http_response(config, prompt);
    throw ConfigError("unknown gateway backend: " + config.backend);
}

Determination parse_answer(const std::string& raw, const std::vector<CandidateOffer>& offered) {
    if (offered.empty()) throw std::invalid_argument("parse_answer: no offered candidates");

    Determination det;
    det.raw_text = raw;

    // 1) first label token "A." / "B." / ... at a word boundary.
    for (size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c < 'A' || c >= static_cast<char>('A' + offered.size())) continue;
        if (i + 1 >= raw.size() || raw[i + 1] != '.') continue;
        if (i > 0 && std::isalnum(static_cast<unsigned char>(raw[i - 1]))) continue;
        det.chosen_index = static_cast<size_t>(c - 'A');
        det.chosen = offered[det.chosen_index].entity;
        det.method = "label";
        return det;
    }

    // 2) longest case-insensitive candidate-name substring.
    const std::string haystack = lowercase(raw);
    size_t best = offered.size();
    size_t best_len = 0;
    for (size_t i = 0; i < offered.size(); ++i) {
        const std::string needle = lowercase(offered[i].name);
        if (needle.empty() || needle.size() <= best_len) continue;
        if (haystack.find(needle) != std::string::npos) {
            best = i;
            best_len = needle.size();
        }
    }
    if (best < offered.size()) {
        det.chosen_index = best;
        det.chosen = offered[best].entity;
        det.method = "name-match";
        return det;
    }

    // 3) the offer list is probability-ordered, so index 0 is the explorer's top-1.
    det.chosen_index = 0;
    det.chosen = offered[0].entity;
    det.method = "fallback-top1";
    return det;
}

Determination determine(const GatewayConfig& config, const PromptBundle& prompt) {
    return parse_answer(complete(config, prompt), prompt.offered);
}

} // namespace etd

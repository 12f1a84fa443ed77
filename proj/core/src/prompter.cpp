#include "etd/prompter.hpp"

#include "etd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace etd {

PromptVariant parse_variant(const std::string& name) {
    if (name == "mcp") return PromptVariant::mcp;
    if (name == "wo_mcp") return PromptVariant::wo_mcp;
    if (name == "wo_cand") return PromptVariant::wo_cand;
    if (name == "wo_prob") return PromptVariant::wo_prob;
    if (name == "wo_path") return PromptVariant::wo_path;
    throw ConfigError("unknown prompt variant: " + name);
}

std::string_view variant_name(PromptVariant variant) {
    switch (variant) {
    case PromptVariant::mcp: return "mcp";
    case PromptVariant::wo_mcp: return "wo_mcp";
    case PromptVariant::wo_cand: return "wo_cand";
    case PromptVariant::wo_prob: return "wo_prob";
    case PromptVariant::wo_path: return "wo_path";
    }
    throw ConfigError("unknown prompt variant enum value");
}

std::string format_probability(double p) {
    p = std::clamp(p, 0.0, 1.0);
    const long milli = static_cast<long>(std::floor(p * 1000.0 + 0.5)); // round half up
    std::string frac = std::to_string(milli % 1000);
    frac.insert(0, 3 - frac.size(), '0');
    while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
    return std::to_string(milli / 1000) + "." + frac;
}

std::vector<size_t> select_top_n(const ExplorationResult& result, size_t n) {
    if (result.candidates.empty()) throw DataError("select_top_n: no candidates");
    if (n < 1) throw std::invalid_argument("select_top_n: n must be >= 1");
    std::vector<size_t> order(result.candidates.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (result.probabilities[a] != result.probabilities[b]) {
            return result.probabilities[a] > result.probabilities[b];
        }
        return result.candidates[a] < result.candidates[b];
    });
    order.resize(std::min(n, order.size()));
    return order;
}

namespace {

char label_of(size_t index) { return static_cast<char>('A' + index); }

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string fact_group(const CandidateOffer& offer) {
    return "{relevant facts: " + join(offer.facts, ", ") + "}";
}

} // namespace

PromptBundle build_prompt(const std::string& question, const std::vector<CandidateOffer>& offered,
                          PromptVariant variant, std::string_view task_description) {
    if (offered.empty()) throw std::invalid_argument("build_prompt: no candidates offered");
    if (offered.size() > 26) throw std::invalid_argument("build_prompt: more candidates than labels");

    PromptBundle bundle;
    bundle.variant = variant;
    bundle.task_description = std::string(task_description);
    bundle.offered = offered;

    std::string body = "Question: " + question + "\n";
    switch (variant) {
    case PromptVariant::mcp:
        body += "Reference answers:";
        for (size_t i = 0; i < offered.size(); ++i) {
            const CandidateOffer& c = offered[i];
            body += "\n";
            body += label_of(i);
            body += ". " + c.name + " (correct probability: " + format_probability(c.probability) + ")";
            if (!c.facts.empty()) body += "  " + fact_group(c);
        }
        break;
    case PromptVariant::wo_mcp: {
        // Flat lists; the fact pool is deduplicated in first-appearance order.
        std::vector<std::string> names, probs, facts;
        for (const CandidateOffer& c : offered) {
            names.push_back(c.name);
            probs.push_back(format_probability(c.probability));
            for (const std::string& f : c.facts) {
                if (std::find(facts.begin(), facts.end(), f) == facts.end()) facts.push_back(f);
            }
        }
        body += "Reference answers include: [" + join(names, ", ") + "].\n";
        body += "Their correct probabilities are [" + join(probs, ", ") + "].\n";
        body += "Relevant facts are [" + join(facts, ", ") + "].";
        break;
    }
    case PromptVariant::wo_cand:
        body += "Relevant facts include:";
        for (const CandidateOffer& c : offered) {
            body += "\n{" + join(c.facts, ", ") + "}(correct probability: " +
                    format_probability(c.probability) + ")";
        }
        break;
    case PromptVariant::wo_prob:
        body += "Reference answers:";
        for (size_t i = 0; i < offered.size(); ++i) {
            const CandidateOffer& c = offered[i];
            body += "\n";
            body += label_of(i);
            body += ". " + c.name;
            if (!c.facts.empty()) body += "  " + fact_group(c);
        }
        break;
    case PromptVariant::wo_path:
        body += "Reference answers:";
        for (size_t i = 0; i < offered.size(); ++i) {
            const CandidateOffer& c = offered[i];
            body += "\n";
            body += label_of(i);
            body += ". " + c.name + " (correct probability: " + format_probability(c.probability) + ")";
        }
        break;
    }
    bundle.body = std::move(body);
    return bundle;
}

} // namespace etd

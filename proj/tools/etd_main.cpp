// etd: explore-then-determine KGQA pipeline driver.
//
// Subcommands: pretrain, finetune, explore, answer, eval, gen-synth, stats.
// Exit codes: 0 success, 1 usage/config, 2 data, 3 transport.

#include "etd/checkpoint.hpp"
#include "etd/config.hpp"
#include "etd/dataset.hpp"
#include "etd/errors.hpp"
#include "etd/eval.hpp"
#include "etd/evidence.hpp"
#include "etd/explorer.hpp"
#include "etd/gateway.hpp"
#include "etd/kg.hpp"
#include "etd/prompter.hpp"
#include "etd/synth.hpp"
#include "etd/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<uint64_t> seed;
    bool as_json = false;
    bool timings = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "TOML-style config file");
    cmd->add_option("--set", args.overrides, "config override, key=value")->type_name("KEY=VALUE");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_flag("--json", args.as_json, "structured JSON output");
    cmd->add_flag("--timings", args.timings, "include wall-clock fields in output");
}

etd::Config load_config(const CommonArgs& args) {
    etd::Config cfg;
    if (!args.config_path.empty()) cfg = etd::Config::from_file(args.config_path);
    for (const std::string& entry : args.overrides) cfg.set_entry(entry);
    return cfg;
}

etd::KnowledgeGraph load_graph(const etd::Config& cfg) {
    const std::string path = cfg.get_string("data.triples", "");
    if (path.empty()) throw etd::ConfigError("config key data.triples is required");
    return etd::KnowledgeGraph::load_triples(path);
}

std::unique_ptr<etd::EmbeddingProvider> provider_from(const etd::Config& cfg) {
    return etd::make_provider(cfg.get_string("encoder.provider", "hash"),
                              static_cast<size_t>(cfg.get_int("encoder.hash_dim", 512)),
                              cfg.get_string("encoder.file", ""));
}

etd::TrainConfig train_config_from(const etd::Config& cfg, const CommonArgs& args,
                                   const etd::EmbeddingProvider& provider) {
    etd::TrainConfig tc;
    tc.d = static_cast<int>(cfg.get_int("model.d", 256));
    tc.d_L = static_cast<int>(provider.dim());
    tc.num_steps = static_cast<int>(cfg.get_int("model.steps", 3));
    tc.top_k = static_cast<int>(cfg.get_int("model.top_k", 200));
    tc.learning_rate = cfg.get_double("train.learning_rate", 1e-4);
    tc.weight_decay = cfg.get_double("train.weight_decay", 1e-3);
    tc.batch_size = static_cast<int>(cfg.get_int("train.batch_size", 20));
    tc.max_epochs = static_cast<int>(cfg.get_int("train.max_epochs", 30));
    tc.seed = args.seed ? *args.seed : static_cast<uint64_t>(cfg.get_int("train.seed", 0));
    tc.validation_metric = cfg.get_string("train.validation_metric", "hits1");
    tc.threads = static_cast<int>(cfg.get_int("train.threads", 1));
    return tc;
}

// Inference-time model: a trained checkpoint, or a seeded random init when
// no checkpoint is given (useful for smoke runs). model.top_k in the config
// overrides the stored pruning budget.
etd::Model inference_model(const etd::Config& cfg, const CommonArgs& args,
                           const etd::EmbeddingProvider& provider, const std::string& ckpt_path) {
    etd::Model model;
    if (!ckpt_path.empty()) {
        model = etd::load_checkpoint(ckpt_path).model;
        if (model.d_L != static_cast<int>(provider.dim())) {
            throw etd::DataError("checkpoint d_L does not match the embedding provider");
        }
    } else {
        const uint64_t seed = args.seed ? *args.seed : static_cast<uint64_t>(cfg.get_int("train.seed", 0));
        model = etd::random_init(static_cast<int>(cfg.get_int("model.d", 256)),
                                 static_cast<int>(provider.dim()),
                                 static_cast<int>(cfg.get_int("model.steps", 3)),
                                 static_cast<int>(cfg.get_int("model.top_k", 200)), seed);
    }
    if (cfg.has("model.top_k")) {
        model.explorer.top_k = static_cast<int>(cfg.get_int("model.top_k", model.explorer.top_k));
    }
    return model;
}

etd::GatewayConfig gateway_from(const etd::Config& cfg) {
    etd::GatewayConfig gw;
    gw.backend = cfg.get_string("llm.backend", "mock");
    gw.endpoint = cfg.get_string("llm.endpoint", "");
    gw.model = cfg.get_string("llm.model", "");
    gw.auth_env = cfg.get_string("llm.auth_env", "");
    gw.timeout_seconds = cfg.get_double("llm.timeout_seconds", 30.0);
    gw.max_retries = static_cast<int>(cfg.get_int("llm.max_retries", 2));
    gw.temperature = cfg.get_double("llm.temperature", 0.0);
    gw.mock_policy = cfg.get_string("llm.mock_policy", "always-A");
    return gw;
}

std::string task_description_from(const etd::Config& cfg) {
    const std::string path = cfg.get_string("prompt.task_file", "");
    if (path.empty()) return std::string(etd::kTaskDescriptionV1);
    std::ifstream file(path);
    if (!file) throw etd::DataError(path + ": cannot open task description");
    std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

std::vector<uint32_t> resolve_topics(const etd::KnowledgeGraph& kg,
                                     const std::vector<std::string>& names) {
    if (names.empty()) throw etd::UsageError("at least one --topic is required");
    std::vector<uint32_t> ids;
    for (const std::string& name : names) {
        const auto id = kg.entity_id(name);
        if (!id) throw etd::DataError("topic entity not in the graph: " + name);
        ids.push_back(*id);
    }
    return ids;
}

void emit(const json& doc, bool as_json, const std::string& text) {
    if (as_json) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << text;
    }
}

// Candidate block shared by explore and answer output.
json candidates_json(const etd::KnowledgeGraph& kg, const etd::ExplorationResult& result,
                     size_t top_n) {
    json arr = json::array();
    for (const size_t idx : etd::select_top_n(result, top_n)) {
        const uint32_t entity = result.candidates[idx];
        const etd::EvidencePath path = etd::backtrack(result, entity);
        json facts = json::array();
        for (const std::string& fact : etd::render_path(path, kg)) facts.push_back(fact);
        arr.push_back({
            {"entity", kg.entity_name(entity)},
            {"probability", result.probabilities[idx]},
            {"probability_display", etd::format_probability(result.probabilities[idx])},
            {"facts", facts},
            {"partial_path", path.partial},
        });
    }
    return arr;
}

json steps_json(const etd::ExplorationResult& result) {
    json arr = json::array();
    for (const etd::StepRecord& step : result.steps) {
        arr.push_back({
            {"retained_edges", step.edges.size()},
            {"considered_edges", step.considered_edges},
            {"considered_candidates", step.considered_candidates},
            {"frontier_size", step.frontier_size},
        });
    }
    return arr;
}

int cmd_train(const CommonArgs& args, const std::string& init_path, const std::string& out_path) {
    const etd::Config cfg = load_config(args);
    const etd::KnowledgeGraph kg = load_graph(cfg);
    const auto provider = provider_from(cfg);
    const etd::TrainConfig tc = train_config_from(cfg, args, *provider);

    const std::string train_path = cfg.get_string("data.train", "");
    if (train_path.empty()) throw etd::ConfigError("config key data.train is required");
    const etd::ResolvedDataset train_set = etd::resolve_dataset(kg, etd::load_dataset(train_path));
    if (train_set.skipped > 0) {
        std::cerr << "warning: skipped " << train_set.skipped
                  << " training rows with unresolvable topic entities\n";
    }

    etd::ResolvedDataset val_set;
    const std::string val_path = cfg.get_string("data.validation", "");
    if (!val_path.empty()) val_set = etd::resolve_dataset(kg, etd::load_dataset(val_path));

    std::optional<etd::Model> initial;
    if (!init_path.empty()) initial = etd::load_checkpoint(init_path).model;

    const etd::TrainOutcome outcome = etd::train(kg, *provider, train_set.examples, val_set.examples,
                                                 tc, initial ? &*initial : nullptr);

    etd::Checkpoint ckpt;
    ckpt.model = outcome.model;
    ckpt.has_adam = true;
    ckpt.adam = outcome.adam;
    ckpt.epochs_trained = static_cast<uint32_t>(outcome.epochs.size());
    ckpt.loss_curve = outcome.loss_curve;
    ckpt.seed = tc.seed;
    const std::string out = out_path.empty() ? cfg.get_string("train.out", "checkpoint.etd") : out_path;
    etd::save_checkpoint(out, ckpt);

    json doc = {
        {"schema_version", kSchemaVersion},
        {"checkpoint", out},
        {"epochs", outcome.epochs.size()},
        {"loss_curve", outcome.loss_curve},
        {"best_epoch", outcome.best_epoch},
        {"skipped_rows", train_set.skipped},
    };
    if (!outcome.epochs.empty()) {
        doc["final_train_loss"] = outcome.epochs.back().train_loss;
        doc["final_missed_rate"] = outcome.epochs.back().missed_rate;
        if (!val_set.examples.empty()) {
            doc["final_val_hits1"] = outcome.epochs.back().val_hits1;
            doc["final_val_loss"] = outcome.epochs.back().val_loss;
        }
    }
    std::string text = "wrote " + out + " after " + std::to_string(outcome.epochs.size()) + " epochs\n";
    if (!outcome.loss_curve.empty()) {
        text += "final train loss " + std::to_string(outcome.loss_curve.back()) + "\n";
    }
    if (outcome.best_epoch >= 0) {
        text += "best validation epoch " + std::to_string(outcome.best_epoch) + "\n";
    }
    emit(doc, args.as_json, text);
    return 0;
}

int cmd_explore(const CommonArgs& args, const std::string& ckpt_path, const std::string& question,
                const std::vector<std::string>& topics, size_t top_n) {
    const etd::Config cfg = load_config(args);
    const etd::KnowledgeGraph kg = load_graph(cfg);
    const auto provider = provider_from(cfg);
    const etd::Model model = inference_model(cfg, args, *provider, ckpt_path);
    if (question.empty()) throw etd::UsageError("--question is required");

    const etd::ExplorationResult result = etd::explore_question(
        kg, *provider, model.encoder, model.explorer, question, resolve_topics(kg, topics));

    json doc = {
        {"schema_version", kSchemaVersion},
        {"question", question},
        {"dead_end", result.dead_end},
        {"candidate_count", result.candidates.size()},
        {"top", candidates_json(kg, result, top_n)},
        {"steps", steps_json(result)},
    };
    std::string text = "candidates: " + std::to_string(result.candidates.size()) + "\n";
    for (const auto& c : doc["top"]) {
        text += "  " + c["entity"].get<std::string>() + "  p=" +
                c["probability_display"].get<std::string>() + "\n";
        for (const auto& f : c["facts"]) text += "    " + f.get<std::string>() + "\n";
    }
    emit(doc, args.as_json, text);
    return 0;
}

int cmd_answer(const CommonArgs& args, const std::string& ckpt_path, const std::string& question,
               const std::vector<std::string>& topics, size_t top_n, const std::string& variant_name,
               const etd::Config& flag_overrides) {
    etd::Config cfg = load_config(args);
    for (const auto& [key, value] : flag_overrides.entries()) cfg.set(key, value);
    const etd::KnowledgeGraph kg = load_graph(cfg);
    const auto provider = provider_from(cfg);
    const etd::Model model = inference_model(cfg, args, *provider, ckpt_path);
    if (question.empty()) throw etd::UsageError("--question is required");

    const etd::ExplorationResult result = etd::explore_question(
        kg, *provider, model.encoder, model.explorer, question, resolve_topics(kg, topics));

    std::vector<etd::CandidateOffer> offered;
    for (const size_t idx : etd::select_top_n(result, top_n)) {
        etd::CandidateOffer offer;
        offer.entity = result.candidates[idx];
        offer.name = kg.entity_name(offer.entity);
        offer.probability = result.probabilities[idx];
        offer.facts = etd::render_path(etd::backtrack(result, offer.entity), kg);
        offered.push_back(std::move(offer));
    }

    const etd::PromptVariant variant =
        etd::parse_variant(variant_name.empty() ? cfg.get_string("prompt.variant", "mcp")
                                                : variant_name);
    const etd::PromptBundle prompt =
        etd::build_prompt(question, offered, variant, task_description_from(cfg));

    etd::GatewayConfig gw = gateway_from(cfg);
    const etd::Determination det = etd::determine(gw, prompt);

    const json doc = {
        {"schema_version", kSchemaVersion},
        {"question", question},
        {"answer", kg.entity_name(det.chosen)},
        {"method", det.method},
        {"raw_response", det.raw_text},
        {"prompt", prompt.full_text()},
        {"variant", std::string(etd::variant_name(variant))},
        {"top", candidates_json(kg, result, top_n)},
    };
    const std::string text =
        "answer: " + kg.entity_name(det.chosen) + " (method: " + det.method + ")\n";
    emit(doc, args.as_json, text);
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& ckpt_path, const std::string& dataset_path,
             bool explore_only, bool with_records, size_t top_n, const std::string& variant_name,
             int threads, const etd::Config& flag_overrides) {
    etd::Config cfg = load_config(args);
    for (const auto& [key, value] : flag_overrides.entries()) cfg.set(key, value);
    const etd::KnowledgeGraph kg = load_graph(cfg);
    const auto provider = provider_from(cfg);
    const etd::Model model = inference_model(cfg, args, *provider, ckpt_path);

    const std::string path = dataset_path.empty() ? cfg.get_string("data.test", "") : dataset_path;
    if (path.empty()) throw etd::ConfigError("config key data.test or --dataset is required");
    const etd::ResolvedDataset dataset = etd::resolve_dataset(kg, etd::load_dataset(path));

    etd::GatewayConfig gw = gateway_from(cfg);
    if (gw.mock_policy == "gold") {
        for (const etd::QaExample& row : dataset.sources) gw.gold_answers[row.question] = row.answers;
    }

    etd::EvalOptions options;
    options.with_llm = !explore_only;
    options.top_n = top_n;
    options.variant = etd::parse_variant(
        variant_name.empty() ? cfg.get_string("prompt.variant", "mcp") : variant_name);
    options.task_description = task_description_from(cfg);
    options.threads = threads > 0 ? threads : static_cast<int>(cfg.get_int("eval.threads", 1));

    const etd::EvalReport report = etd::run_eval(kg, *provider, model, dataset, gw, options);

    json doc = {
        {"schema_version", kSchemaVersion},
        {"questions", report.questions},
        {"skipped", report.skipped},
        {"hits1", report.hits1},
        {"explore_only_hits1", report.explore_only_hits1},
        {"missed_answer_rate", report.missed_answer_rate},
        {"mean_retained_edges", report.mean_retained_edges},
        {"mean_considered_edges", report.mean_considered_edges},
        {"mean_frontier_size", report.mean_frontier_size},
        {"mean_considered_candidates", report.mean_considered_candidates},
    };
    if (args.timings) {
        doc["seconds_explore"] = report.seconds_explore;
        doc["seconds_llm"] = report.seconds_llm;
    }
    if (with_records) {
        json records = json::array();
        for (const etd::QuestionRecord& r : report.records) {
            records.push_back({
                {"question", r.question},
                {"predicted", r.predicted},
                {"explore_predicted", r.explore_predicted},
                {"method", r.method},
                {"gold", r.gold},
                {"correct", r.correct},
                {"explore_correct", r.explore_correct},
                {"dead_end", r.dead_end},
            });
        }
        doc["records"] = std::move(records);
    }

    std::string text;
    text += "questions:            " + std::to_string(report.questions) + "\n";
    text += "hits@1:               " + std::to_string(report.hits1) + "\n";
    text += "explore-only hits@1:  " + std::to_string(report.explore_only_hits1) + "\n";
    text += "missed answer rate:   " + std::to_string(report.missed_answer_rate) + "\n";
    for (size_t s = 0; s < report.mean_retained_edges.size(); ++s) {
        text += "step " + std::to_string(s + 1) +
                ": mean retained edges " + std::to_string(report.mean_retained_edges[s]) +
                ", considered " + std::to_string(report.mean_considered_edges[s]) + "\n";
    }
    emit(doc, args.as_json, text);
    return 0;
}

int cmd_gen_synth(const CommonArgs& args, const std::string& out_dir) {
    const etd::Config cfg = load_config(args);
    etd::SynthSpec spec;
    spec.entities = static_cast<size_t>(cfg.get_int("synth.entities", 1000));
    spec.relations = static_cast<size_t>(cfg.get_int("synth.relations", 8));
    spec.pattern_hops = static_cast<size_t>(cfg.get_int("synth.pattern_hops", 2));
    spec.hop_budget = static_cast<size_t>(cfg.get_int("synth.hop_budget", 2));
    spec.train_questions = static_cast<size_t>(cfg.get_int("synth.train_questions", 500));
    spec.test_questions = static_cast<size_t>(cfg.get_int("synth.test_questions", 100));
    spec.distractor_density = cfg.get_double("synth.distractor_density", 4.0);
    spec.seed = args.seed ? *args.seed : static_cast<uint64_t>(cfg.get_int("synth.seed", 7));

    const std::string dir = out_dir.empty() ? cfg.get_string("synth.out_dir", "synth-data") : out_dir;
    const etd::SynthData data = etd::gen_synthetic(spec);
    etd::write_synth(data, dir);

    const json doc = {
        {"schema_version", kSchemaVersion},
        {"dir", dir},
        {"triples", data.triples.size()},
        {"train_questions", data.train.size()},
        {"test_questions", data.test.size()},
        {"pattern", data.pattern},
    };
    emit(doc, args.as_json,
         "wrote " + dir + "/triples.tsv (" + std::to_string(data.triples.size()) + " triples), " +
             std::to_string(data.train.size()) + " train / " + std::to_string(data.test.size()) +
             " test questions\n");
    return 0;
}

int cmd_stats(const CommonArgs& args, const std::string& ckpt_path, const std::string& dataset_path) {
    const etd::Config cfg = load_config(args);
    const etd::KnowledgeGraph kg = load_graph(cfg);
    const auto provider = provider_from(cfg);
    etd::Model model = inference_model(cfg, args, *provider, ckpt_path);

    const std::string path = dataset_path.empty() ? cfg.get_string("data.test", "") : dataset_path;
    if (path.empty()) throw etd::ConfigError("config key data.test or --dataset is required");
    const etd::ResolvedDataset dataset = etd::resolve_dataset(kg, etd::load_dataset(path));

    const std::vector<etd::Vec> relation_embs =
        etd::encode_relations(model.encoder, etd::collect_relation_features(*provider, kg));

    auto explore_all = [&](int top_k) {
        etd::Model m = model;
        m.explorer.top_k = top_k;
        std::vector<etd::ExplorationResult> results;
        results.reserve(dataset.examples.size());
        for (const etd::TrainExample& ex : dataset.examples) {
            const etd::Vec h_q = etd::project(m.encoder, provider->encode(ex.question));
            results.push_back(etd::explore(kg, relation_embs, m.explorer, h_q, ex.topic_entities));
        }
        return etd::prune_stats(results);
    };

    const etd::PruneStats pruned = explore_all(model.explorer.top_k);
    const int unpruned_k = static_cast<int>(kg.max_out_degree()) + 1;
    const etd::PruneStats unpruned = explore_all(unpruned_k);

    const json doc = {
        {"schema_version", kSchemaVersion},
        {"questions", dataset.examples.size()},
        {"top_k", model.explorer.top_k},
        {"unpruned_k", unpruned_k},
        {"pruned",
         {{"mean_retained_edges", pruned.mean_retained_edges},
          {"mean_considered_edges", pruned.mean_considered_edges},
          {"mean_frontier_size", pruned.mean_frontier_size},
          {"mean_considered_candidates", pruned.mean_considered_candidates},
          {"max_retained_per_head", pruned.max_retained_per_head}}},
        {"unpruned",
         {{"mean_retained_edges", unpruned.mean_retained_edges},
          {"mean_considered_edges", unpruned.mean_considered_edges},
          {"mean_frontier_size", unpruned.mean_frontier_size},
          {"mean_considered_candidates", unpruned.mean_considered_candidates},
          {"max_retained_per_head", unpruned.max_retained_per_head}}},
    };
    std::string text = "K=" + std::to_string(model.explorer.top_k) + " vs unpruned K=" +
                       std::to_string(unpruned_k) + "\n";
    for (size_t s = 0; s < pruned.mean_retained_edges.size(); ++s) {
        text += "step " + std::to_string(s + 1) + ": retained " +
                std::to_string(pruned.mean_retained_edges[s]) + " vs " +
                std::to_string(unpruned.mean_retained_edges[s]) + "\n";
    }
    emit(doc, args.as_json, text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explore-then-determine KGQA engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "etd 0.1.0");

    CommonArgs pretrain_args, finetune_args, explore_args, answer_args, eval_args, synth_args,
        stats_args;
    std::string finetune_init, train_out, finetune_out;
    std::string explore_ckpt, answer_ckpt, eval_ckpt, stats_ckpt;
    std::string explore_question, answer_question;
    std::vector<std::string> explore_topics, answer_topics;
    size_t explore_top_n = 3, answer_top_n = 3, eval_top_n = 3;
    std::string answer_variant, eval_variant;
    std::string eval_dataset, stats_dataset, synth_out;
    bool eval_explore_only = false, eval_records = false;
    int eval_threads = 0;
    std::string llm_backend, llm_endpoint, llm_model, mock_policy;

    CLI::App* pretrain = app.add_subcommand("pretrain", "train a model from scratch");
    add_common(pretrain, pretrain_args);
    pretrain->add_option("--out", train_out, "checkpoint output path");

    CLI::App* finetune = app.add_subcommand("finetune", "continue training from a checkpoint");
    add_common(finetune, finetune_args);
    finetune->add_option("--init", finetune_init, "initial checkpoint")->required();
    finetune->add_option("--out", finetune_out, "checkpoint output path");

    CLI::App* explore = app.add_subcommand("explore", "explore candidates for one question");
    add_common(explore, explore_args);
    explore->add_option("--checkpoint", explore_ckpt, "trained checkpoint");
    explore->add_option("--question", explore_question, "question text")->required();
    explore->add_option("--topic", explore_topics, "topic entity name (repeatable)")->required();
    explore->add_option("--top-n", explore_top_n, "candidates to report");

    CLI::App* answer = app.add_subcommand("answer", "full pipeline for one question");
    add_common(answer, answer_args);
    answer->add_option("--checkpoint", answer_ckpt, "trained checkpoint");
    answer->add_option("--question", answer_question, "question text")->required();
    answer->add_option("--topic", answer_topics, "topic entity name (repeatable)")->required();
    answer->add_option("--top-n", answer_top_n, "candidates offered to the LLM");
    answer->add_option("--prompt-variant", answer_variant, "mcp|wo_mcp|wo_cand|wo_prob|wo_path");
    answer->add_option("--llm-backend", llm_backend, "http|mock");
    answer->add_option("--llm-endpoint", llm_endpoint, "chat completion URL");
    answer->add_option("--llm-model", llm_model, "model name");
    answer->add_option("--mock-policy", mock_policy, "mock behavior");

    CLI::App* eval = app.add_subcommand("eval", "evaluate Hits@1 over a dataset");
    add_common(eval, eval_args);
    eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint");
    eval->add_option("--dataset", eval_dataset, "JSONL dataset (default: data.test)");
    eval->add_flag("--explore-only", eval_explore_only, "skip the LLM determination");
    eval->add_flag("--records", eval_records, "include per-question records in JSON");
    eval->add_option("--top-n", eval_top_n, "candidates offered to the LLM");
    eval->add_option("--prompt-variant", eval_variant, "prompt layout");
    eval->add_option("--threads", eval_threads, "worker pool size");
    eval->add_option("--llm-backend", llm_backend, "http|mock");
    eval->add_option("--llm-endpoint", llm_endpoint, "chat completion URL");
    eval->add_option("--llm-model", llm_model, "model name");
    eval->add_option("--mock-policy", mock_policy, "mock behavior");

    CLI::App* gen_synth = app.add_subcommand("gen-synth", "generate the synthetic benchmark");
    add_common(gen_synth, synth_args);
    gen_synth->add_option("--out", synth_out, "output directory");

    CLI::App* stats = app.add_subcommand("stats", "pruned vs unpruned exploration statistics");
    add_common(stats, stats_args);
    stats->add_option("--checkpoint", stats_ckpt, "trained checkpoint");
    stats->add_option("--dataset", stats_dataset, "JSONL dataset (default: data.test)");

    try {
        app.parse(argc, argv);

        etd::Config flag_overrides;
        if (!llm_backend.empty()) flag_overrides.set("llm.backend", llm_backend);
        if (!llm_endpoint.empty()) flag_overrides.set("llm.endpoint", llm_endpoint);
        if (!llm_model.empty()) flag_overrides.set("llm.model", llm_model);
        if (!mock_policy.empty()) flag_overrides.set("llm.mock_policy", mock_policy);

        if (pretrain->parsed()) return cmd_train(pretrain_args, "", train_out);
        if (finetune->parsed()) return cmd_train(finetune_args, finetune_init, finetune_out);
        if (explore->parsed()) {
            return cmd_explore(explore_args, explore_ckpt, explore_question, explore_topics,
                               explore_top_n);
        }
        if (answer->parsed()) {
            return cmd_answer(answer_args, answer_ckpt, answer_question, answer_topics, answer_top_n,
                              answer_variant, flag_overrides);
        }
        if (eval->parsed()) {
            return cmd_eval(eval_args, eval_ckpt, eval_dataset, eval_explore_only, eval_records,
                            eval_top_n, eval_variant, eval_threads, flag_overrides);
        }
        if (gen_synth->parsed()) return cmd_gen_synth(synth_args, synth_out);
        if (stats->parsed()) return cmd_stats(stats_args, stats_ckpt, stats_dataset);
        throw etd::UsageError("no subcommand given");
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const etd::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const etd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const etd::TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const etd::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

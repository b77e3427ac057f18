#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ope/backend.hpp"
#include "ope/common.hpp"
#include "ope/model.hpp"
#include "ope/prompting.hpp"
#include "ope/rl.hpp"

namespace ope {

struct ScheduleConfig {
    int iterations = 2;
    int steps_plan = 70;
    int steps_reason = 65;
};

/// Effective configuration of one command invocation. Defaults are the
/// protocol's reference values; a config file overrides defaults and CLI
/// flags override both.
struct RunConfig {
    Mode mode = Mode::ope;
    int n = 4;                     // outlines (ope) or parallel paths (naive)
    int k = 4;                     // reward-estimation paths per outline
    int g = 8;                     // rollout group size
    int samples_per_outline = 1;   // exploration paths per outline
    SamplingParams sampling;       // n_samples is derived per command
    BackendConfig backend;
    std::string mock_script;       // non-empty: use the scripted mock backend
    std::uint64_t seed = 0;
    std::string queries_path;
    std::string out_dir;
    ScheduleConfig schedule;
    std::string template_dir;
    PathPromptMode path_prompt_mode = PathPromptMode::full_block;
    PlanRewardGranularity plan_reward_granularity = PlanRewardGranularity::set;
    std::vector<std::string> strategies = {"random", "self-consistency", "best-of-n"};
    std::vector<int> ks;           // empty: powers of two up to n
    std::string summarizer_model;  // defaults to backend.model
    int synth_max_attempts = 3;
    AcceptCriterion accept = AcceptCriterion::any_path_correct;
    std::string baseline_dir;      // metrics: second run for the cross-matrix
    long long maj_trials = 20000;
};

inline ojson to_json(const RunConfig& c) {
    ojson j;
    j["mode"] = to_string(c.mode);
    j["n"] = c.n;
    j["k"] = c.k;
    j["g"] = c.g;
    j["samples_per_outline"] = c.samples_per_outline;
    j["sampling"] = ojson{{"temperature", c.sampling.temperature},
                          {"top_p", c.sampling.top_p},
                          {"max_tokens", c.sampling.max_tokens}};
    j["backend"] = ojson{{"base_url", c.backend.base_url},
                         {"model", c.backend.model},
                         {"api_key_env", c.backend.api_key_env},
                         {"max_concurrency", c.backend.max_concurrency},
                         {"timeout_s", c.backend.timeout.count()},
                         {"server_side_n", c.backend.server_side_n},
                         {"retry", ojson{{"max_attempts", c.backend.retry.max_attempts},
                                         {"base_delay_ms", c.backend.retry.base_delay.count()},
                                         {"jitter", c.backend.retry.jitter}}}};
    j["mock_script"] = c.mock_script;
    j["seed"] = c.seed;
    j["queries"] = c.queries_path;
    j["schedule"] = ojson{{"iterations", c.schedule.iterations},
                          {"steps_plan", c.schedule.steps_plan},
                          {"steps_reason", c.schedule.steps_reason}};
    j["templates"] = c.template_dir;
    j["path_prompt_mode"] = to_string(c.path_prompt_mode);
    j["plan_reward_granularity"] = to_string(c.plan_reward_granularity);
    j["strategies"] = c.strategies;
    j["ks"] = c.ks;
    j["summarizer_model"] = c.summarizer_model;
    j["synth_max_attempts"] = c.synth_max_attempts;
    j["accept_criterion"] = to_string(c.accept);
    j["baseline"] = c.baseline_dir;
    j["maj_trials"] = c.maj_trials;
    return j;
}

/// Applies a partial JSON overlay onto a config; unknown keys are rejected so
/// typos fail loudly.
inline void apply_config_json(RunConfig& c, const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "mode", "n", "k", "g", "samples_per_outline", "sampling", "backend", "mock_script",
        "seed", "queries", "out", "schedule", "templates", "path_prompt_mode",
        "plan_reward_granularity", "strategies", "ks", "summarizer_model", "synth_max_attempts",
        "accept_criterion", "baseline", "maj_trials"};
    for (const auto& [key, _] : j.items()) {
        if (known.count(key) == 0) throw ParseError("unknown config key: " + key);
    }
    if (j.contains("mode")) c.mode = mode_from_string(j["mode"].get<std::string>());
    if (j.contains("n")) c.n = j["n"].get<int>();
    if (j.contains("k")) c.k = j["k"].get<int>();
    if (j.contains("g")) c.g = j["g"].get<int>();
    if (j.contains("samples_per_outline"))
        c.samples_per_outline = j["samples_per_outline"].get<int>();
    if (j.contains("sampling")) {
        const auto& s = j["sampling"];
        if (s.contains("temperature")) c.sampling.temperature = s["temperature"].get<double>();
        if (s.contains("top_p")) c.sampling.top_p = s["top_p"].get<double>();
        if (s.contains("max_tokens")) c.sampling.max_tokens = s["max_tokens"].get<int>();
    }
    if (j.contains("backend")) {
        const auto& b = j["backend"];
        if (b.contains("base_url")) c.backend.base_url = b["base_url"].get<std::string>();
        if (b.contains("model")) c.backend.model = b["model"].get<std::string>();
        if (b.contains("api_key_env")) c.backend.api_key_env = b["api_key_env"].get<std::string>();
        if (b.contains("max_concurrency"))
            c.backend.max_concurrency = b["max_concurrency"].get<int>();
        if (b.contains("timeout_s"))
            c.backend.timeout = std::chrono::seconds(b["timeout_s"].get<long long>());
        if (b.contains("server_side_n")) c.backend.server_side_n = b["server_side_n"].get<bool>();
        if (b.contains("retry")) {
            const auto& r = b["retry"];
            if (r.contains("max_attempts"))
                c.backend.retry.max_attempts = r["max_attempts"].get<int>();
            if (r.contains("base_delay_ms"))
                c.backend.retry.base_delay =
                    std::chrono::milliseconds(r["base_delay_ms"].get<long long>());
            if (r.contains("jitter")) c.backend.retry.jitter = r["jitter"].get<bool>();
        }
    }
    if (j.contains("mock_script")) c.mock_script = j["mock_script"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("queries")) c.queries_path = j["queries"].get<std::string>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        if (s.contains("iterations")) c.schedule.iterations = s["iterations"].get<int>();
        if (s.contains("steps_plan")) c.schedule.steps_plan = s["steps_plan"].get<int>();
        if (s.contains("steps_reason")) c.schedule.steps_reason = s["steps_reason"].get<int>();
    }
    if (j.contains("templates")) c.template_dir = j["templates"].get<std::string>();
    if (j.contains("path_prompt_mode"))
        c.path_prompt_mode = path_prompt_mode_from_string(j["path_prompt_mode"].get<std::string>());
    if (j.contains("plan_reward_granularity"))
        c.plan_reward_granularity =
            plan_granularity_from_string(j["plan_reward_granularity"].get<std::string>());
    if (j.contains("strategies")) c.strategies = j["strategies"].get<std::vector<std::string>>();
    if (j.contains("ks")) c.ks = j["ks"].get<std::vector<int>>();
    if (j.contains("summarizer_model"))
        c.summarizer_model = j["summarizer_model"].get<std::string>();
    if (j.contains("synth_max_attempts")) c.synth_max_attempts = j["synth_max_attempts"].get<int>();
    if (j.contains("accept_criterion"))
        c.accept = accept_criterion_from_string(j["accept_criterion"].get<std::string>());
    if (j.contains("baseline")) c.baseline_dir = j["baseline"].get<std::string>();
    if (j.contains("maj_trials")) c.maj_trials = j["maj_trials"].get<long long>();
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed config " + path.string() + ": " + e.what());
    }
    RunConfig c;
    apply_config_json(c, j);
    return c;
}

/// Deterministic digest over the effective config. The output directory is
/// deliberately excluded so reruns into different directories stay
/// byte-identical.
inline std::string config_digest(const RunConfig& c) {
    // plain json sorts keys, making the dump canonical
    const nlohmann::json canonical = nlohmann::json::parse(to_json(c).dump());
    return hex64(fnv1a64(canonical.dump()));
}

inline std::string run_id_for(const RunConfig& c) { return "run-" + config_digest(c); }

/// Default curve grid: powers of two up to n, always ending at n.
inline std::vector<int> default_ks(int n) {
    std::vector<int> ks;
    for (int k = 1; k <= n; k *= 2) ks.push_back(k);
    if (ks.empty() || ks.back() != n) ks.push_back(n);
    return ks;
}

}  // namespace ope

// ope: outline-guided path exploration over chat-completion backends.
//
// Subcommands map onto the pipeline stages:
//   explore    sample outline sets + reasoning paths and verify them
//   aggregate  reduce each query's path set to one answer per strategy
//   metrics    pass@k / maj@k curves, diversity stats, cross-run analysis
//   rlgen      generate GRPO-ready training records on the phase schedule
//   synth      cold-start rejection sampling
//
// Exit codes: 0 success, 1 partial failure, 2 usage error.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ope/ope.hpp"

namespace {

struct FlagOverlay {
    std::optional<std::string> config_file;
    std::optional<std::string> queries;
    std::optional<std::string> mode;
    std::optional<int> n;
    std::optional<int> k;
    std::optional<int> g;
    std::optional<int> samples_per_outline;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<int> max_tokens;
    std::optional<int> concurrency;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> mock;
    std::optional<std::string> templates;
    std::optional<std::string> path_prompt_mode;
    std::optional<std::string> granularity;
    std::optional<std::vector<std::string>> strategies;
    std::optional<std::vector<int>> ks;
    std::optional<std::string> summarizer;
    std::optional<std::string> baseline;
    std::optional<int> iterations;
    std::optional<int> steps_plan;
    std::optional<int> steps_reason;
    std::optional<int> max_attempts;
    std::optional<std::string> accept;
    bool client_side_n = false;
};

void add_common_flags(CLI::App* cmd, FlagOverlay& f) {
    cmd->add_option("--config", f.config_file, "JSON config file (flags override it)");
    cmd->add_option("--queries", f.queries, "query file, one JSON object per line");
    cmd->add_option("--mode", f.mode, "exploration mode: naive | ope");
    cmd->add_option("--n", f.n, "outline count (ope) or parallel path count (naive)");
    cmd->add_option("--k", f.k, "reward-estimation paths per outline");
    cmd->add_option("--g", f.g, "rollout group size");
    cmd->add_option("--samples-per-outline", f.samples_per_outline,
                    "exploration paths sampled per outline");
    cmd->add_option("--endpoint", f.endpoint, "backend base URL, e.g. http://host:8000/v1");
    cmd->add_option("--model", f.model, "backend model id");
    cmd->add_option("--temperature", f.temperature, "sampling temperature");
    cmd->add_option("--top-p", f.top_p, "nucleus sampling threshold");
    cmd->add_option("--max-tokens", f.max_tokens, "per-path generation budget");
    cmd->add_option("--concurrency", f.concurrency, "max in-flight backend requests");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--out", f.out, "run directory");
    cmd->add_option("--mock", f.mock, "scripted mock backend file (overrides --endpoint)");
    cmd->add_option("--templates", f.templates, "prompt template directory");
    cmd->add_option("--path-prompt-mode", f.path_prompt_mode,
                    "path prompt assembly: full-block | single-outline");
    cmd->add_flag("--client-side-n", f.client_side_n,
                  "expand n>1 sampling into independent requests");
}

ope::RunConfig build_config(const FlagOverlay& f) {
    ope::RunConfig c;
    if (f.config_file) c = ope::load_config_file(*f.config_file);
    if (f.queries) c.queries_path = *f.queries;
    if (f.mode) c.mode = ope::mode_from_string(*f.mode);
    if (f.n) c.n = *f.n;
    if (f.k) c.k = *f.k;
    if (f.g) c.g = *f.g;
    if (f.samples_per_outline) c.samples_per_outline = *f.samples_per_outline;
    if (f.endpoint) c.backend.base_url = *f.endpoint;
    if (f.model) c.backend.model = *f.model;
    if (f.temperature) c.sampling.temperature = *f.temperature;
    if (f.top_p) c.sampling.top_p = *f.top_p;
    if (f.max_tokens) c.sampling.max_tokens = *f.max_tokens;
    if (f.concurrency) c.backend.max_concurrency = *f.concurrency;
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.out_dir = *f.out;
    if (f.mock) c.mock_script = *f.mock;
    if (f.templates) c.template_dir = *f.templates;
    if (f.path_prompt_mode)
        c.path_prompt_mode = ope::path_prompt_mode_from_string(*f.path_prompt_mode);
    if (f.granularity)
        c.plan_reward_granularity = ope::plan_granularity_from_string(*f.granularity);
    if (f.strategies) c.strategies = *f.strategies;
    if (f.ks) c.ks = *f.ks;
    if (f.summarizer) c.summarizer_model = *f.summarizer;
    if (f.baseline) c.baseline_dir = *f.baseline;
    if (f.iterations) c.schedule.iterations = *f.iterations;
    if (f.steps_plan) c.schedule.steps_plan = *f.steps_plan;
    if (f.steps_reason) c.schedule.steps_reason = *f.steps_reason;
    if (f.max_attempts) c.synth_max_attempts = *f.max_attempts;
    if (f.accept) c.accept = ope::accept_criterion_from_string(*f.accept);
    if (f.client_side_n) c.backend.server_side_n = false;
    return c;
}

int report_and_exit(const ope::CommandReport& report, const char* verb) {
    std::printf("%s: %zu records, %zu paths -> %s\n", verb, report.records, report.paths,
                report.run_dir.string().c_str());
    for (const auto& [key, value] : report.summary)
        std::printf("  %-18s %.4f\n", key.c_str(), value);
    if (!report.failures.empty()) {
        std::fprintf(stderr, "%zu item(s) failed permanently:\n", report.failures.size());
        for (const auto& f : report.failures) std::fprintf(stderr, "  %s\n", f.c_str());
    }
    return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"outline-guided path exploration over chat-completion backends"};
    app.require_subcommand(1);

    FlagOverlay flags;
    auto* explore = app.add_subcommand("explore", "sample and verify reasoning paths");
    auto* aggregate = app.add_subcommand("aggregate", "aggregate verified path sets");
    auto* metrics = app.add_subcommand("metrics", "compute curves and statistics");
    auto* rlgen = app.add_subcommand("rlgen", "generate RL training records");
    auto* synth = app.add_subcommand("synth", "cold-start rejection sampling");

    for (auto* cmd : {explore, aggregate, metrics, rlgen, synth}) add_common_flags(cmd, flags);

    aggregate->add_option("--strategies", flags.strategies,
                          "random, self-consistency, best-of-n, lrm-summary");
    aggregate->add_option("--summarizer", flags.summarizer, "summarizer model id");
    metrics->add_option("--ks", flags.ks, "curve points, e.g. 1 2 4 8");
    metrics->add_option("--baseline", flags.baseline, "baseline run directory for the cross-matrix");
    rlgen->add_option("--iterations", flags.iterations, "schedule iterations");
    rlgen->add_option("--steps-plan", flags.steps_plan, "planning steps per iteration");
    rlgen->add_option("--steps-reason", flags.steps_reason, "reasoning steps per iteration");
    rlgen->add_option("--granularity", flags.granularity, "plan reward granularity: set | outline");
    synth->add_option("--max-attempts", flags.max_attempts, "rejection sampling attempts per query");
    synth->add_option("--accept", flags.accept,
                      "acceptance criterion: any-correct | all-present-one-correct");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit cleanly, everything else is misuse
    }

    try {
        const ope::RunConfig config = build_config(flags);
        if (explore->parsed()) return report_and_exit(ope::cmd_explore(config), "explore");
        if (aggregate->parsed()) return report_and_exit(ope::cmd_aggregate(config), "aggregate");
        if (metrics->parsed()) return report_and_exit(ope::cmd_metrics(config), "metrics");
        if (rlgen->parsed()) return report_and_exit(ope::cmd_rlgen(config), "rlgen");
        if (synth->parsed()) return report_and_exit(ope::cmd_synth(config), "synth");
        return 2;
    } catch (const ope::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

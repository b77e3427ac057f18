#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ope/aggregation.hpp"
#include "ope/backend.hpp"
#include "ope/config.hpp"
#include "ope/http_backend.hpp"
#include "ope/metrics.hpp"
#include "ope/mock_backend.hpp"
#include "ope/model.hpp"
#include "ope/rl.hpp"
#include "ope/verifier.hpp"

namespace ope {

namespace fs = std::filesystem;

// ----------------------------------------------------------------------------
// Run directory plumbing
// ----------------------------------------------------------------------------

/// Advisory exclusive lock on a run directory; held for the lifetime of one
/// command so two processes never write the same run.
class RunLock {
public:
    explicit RunLock(const fs::path& dir) {
        fs::create_directories(dir);
        path_ = dir / ".lock";
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IoError("cannot open lock file: " + path_.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            fd_ = -1;
            throw Error("run directory is locked by another process: " + dir.string());
        }
    }

    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

    ~RunLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }

private:
    fs::path path_;
    int fd_ = -1;
};

struct CommandReport {
    fs::path run_dir;
    std::size_t records = 0;
    std::size_t paths = 0;
    std::vector<std::string> failures;
    std::vector<std::pair<std::string, double>> summary;  // printable key figures

    int exit_code() const { return failures.empty() ? 0 : 1; }
};

inline std::shared_ptr<ChatBackend> make_backend(const RunConfig& config) {
    if (!config.mock_script.empty()) {
        std::shared_ptr<ChatBackend> mock =
            MockBackend::from_script(config.mock_script, config.seed);
        return std::make_shared<RetryingBackend>(std::move(mock), config.backend.retry);
    }
    if (config.backend.base_url.empty())
        throw UsageError("no backend configured: set backend.base_url or mock_script");
    return make_http_backend(config.backend);
}

inline PromptTemplates load_templates(const RunConfig& config) {
    if (config.template_dir.empty()) return PromptTemplates::defaults();
    return PromptTemplates::load_dir(config.template_dir);
}

inline RunManifest make_manifest(const RunConfig& config, const std::string& backend_id,
                                 std::size_t queries, std::size_t records) {
    RunManifest m;
    m.run_id = run_id_for(config);
    m.created_at = iso8601_utc(manifest_clock());
    m.config_digest = config_digest(config);
    m.seed = static_cast<long long>(config.seed);
    m.mode = to_string(config.mode);
    m.backend = backend_id;
    m.path_prompt_mode = to_string(config.path_prompt_mode);
    m.query_count = queries;
    m.record_count = records;
    return m;
}

namespace cmd_detail {

inline std::vector<Query> load_query_input(const RunConfig& config) {
    if (config.queries_path.empty()) throw UsageError("missing queries file (--queries)");
    return load_queries(config.queries_path);
}

inline fs::path require_out_dir(const RunConfig& config) {
    if (config.out_dir.empty()) throw UsageError("missing output directory (--out)");
    return fs::path(config.out_dir);
}

inline std::set<std::string> completed_query_ids(const fs::path& records_path) {
    std::set<std::string> done;
    if (!fs::exists(records_path)) return done;
    RecordReader reader(records_path);
    while (auto r = reader.next()) done.insert(r->query.id);
    return done;
}

/// BoN verdict per query: correct iff any path verified true.
inline std::map<std::string, bool> bon_verdicts(const std::vector<ExplorationRecord>& records) {
    std::map<std::string, bool> verdicts;
    for (const auto& r : records) {
        bool any = false;
        for (const auto& p : r.paths) any |= p.correct.value_or(false);
        verdicts[r.query.id] = any;
    }
    return verdicts;
}

inline ojson to_json(const FrequencyDistribution& d) {
    ojson buckets = ojson::array();
    for (const auto& b : d.buckets)
        buckets.push_back(ojson{{"correct_paths", b.correct_paths},
                                {"queries", b.queries},
                                {"percent", b.percent}});
    return ojson{{"buckets", std::move(buckets)},
                 {"total", d.total},
                 {"zero_correct", d.zero_correct}};
}

inline ojson to_json(const CurvePoint& p) {
    ojson j{{"k", p.k}, {"value", p.value}};
    if (p.stderr_) j["stderr"] = *p.stderr_;
    return j;
}

}  // namespace cmd_detail

// ----------------------------------------------------------------------------
// explore
// ----------------------------------------------------------------------------

/// Runs the exploration phase over a query file: planning (ope) plus path
/// sampling, verification, and one ExplorationRecord per query. Resumable:
/// query ids already present in records.jsonl are skipped.
inline CommandReport cmd_explore(const RunConfig& config) {
    const auto queries = cmd_detail::load_query_input(config);
    const fs::path out = cmd_detail::require_out_dir(config);
    RunLock lock(out);
    const auto backend = make_backend(config);
    const PromptTemplates tpl = load_templates(config);

    const fs::path records_path = out / "records.jsonl";
    const auto done = cmd_detail::completed_query_ids(records_path);
    write_manifest(make_manifest(config, backend->id(), queries.size(), done.size()),
                   out / "manifest.json");

    CommandReport report;
    report.run_dir = out;
    const std::string run_id = run_id_for(config);
    RecordWriter writer(records_path, /*append=*/true);
    std::size_t total_records = done.size();

    for (const auto& q : queries) {
        if (done.count(q.id)) continue;

        ExplorationRecord record;
        record.query = q;
        record.mode = config.mode;
        record.run_id = run_id;
        record.sampling = config.sampling;
        record.sampling.seed = static_cast<long long>(config.seed);

        if (config.mode == Mode::ope) {
            record.sampling.n_samples = config.samples_per_outline;
            std::optional<OutlineSet> set;
            std::string last_error = "planning produced no parseable outline set";
            for (int attempt = 1; attempt <= config.backend.retry.max_attempts && !set; ++attempt) {
                SamplingParams plan_sampling = config.sampling;
                plan_sampling.n_samples = 1;
                plan_sampling.seed = static_cast<long long>(mix_seed(
                    mix_seed(config.seed, q.id), static_cast<std::uint64_t>(attempt)));
                try {
                    const auto resp = backend->complete(make_request(
                        config.backend.model, build_planning_prompt(q, config.n, tpl),
                        plan_sampling, 1));
                    set = parse_outlines(resp.completions.front().content, config.n, q.id);
                } catch (const OutlineParseError& e) {
                    last_error = e.what();  // regenerate with a fresh seed
                } catch (const std::exception& e) {
                    last_error = e.what();
                    break;  // the retry stack already exhausted transient failures
                }
            }
            if (!set) {
                report.failures.push_back(q.id + ": " + last_error);
                continue;
            }
            record.outline_set = *set;

            std::vector<ChatRequest> requests;
            for (int i = 1; i <= config.n; ++i) {
                SamplingParams path_sampling = config.sampling;
                path_sampling.n_samples = config.samples_per_outline;
                path_sampling.seed = static_cast<long long>(mix_seed(
                    mix_seed(mix_seed(config.seed, q.id), "path"), static_cast<std::uint64_t>(i)));
                requests.push_back(make_request(
                    config.backend.model,
                    build_path_prompt(q, *set, i, config.path_prompt_mode, tpl), path_sampling,
                    config.samples_per_outline));
            }
            const auto batch = sample_paths(*backend, requests, config.backend.max_concurrency);
            bool failed = false;
            for (std::size_t r = 0; r < batch.size(); ++r) {
                if (!batch[r].ok()) {
                    report.failures.push_back(q.id + ": path sampling: " + batch[r].error);
                    failed = true;
                    break;
                }
                for (const auto& completion : batch[r].response->completions) {
                    ReasoningPath p = path_from_completion(completion, q.id, Mode::ope,
                                                           static_cast<int>(r) + 1);
                    record.paths.push_back(verify_path(std::move(p), q.ground_truth));
                }
            }
            if (failed) continue;
        } else {
            record.sampling.n_samples = config.n;
            SamplingParams naive_sampling = config.sampling;
            naive_sampling.n_samples = config.n;
            naive_sampling.seed = static_cast<long long>(
                mix_seed(mix_seed(config.seed, q.id), "naive"));
            try {
                const auto resp = backend->complete(make_request(
                    config.backend.model, build_naive_prompt(q, tpl), naive_sampling, config.n));
                for (const auto& completion : resp.completions) {
                    ReasoningPath p =
                        path_from_completion(completion, q.id, Mode::naive, std::nullopt);
                    record.paths.push_back(verify_path(std::move(p), q.ground_truth));
                }
            } catch (const std::exception& e) {
                report.failures.push_back(q.id + ": " + e.what());
                continue;
            }
        }

        writer.write(record);
        ++total_records;
        report.paths += record.paths.size();
        ++report.records;
    }

    write_manifest(make_manifest(config, backend->id(), queries.size(), total_records),
                   out / "manifest.json");
    return report;
}

// ----------------------------------------------------------------------------
// aggregate
// ----------------------------------------------------------------------------

/// Applies the requested aggregation strategies to every record of a run and
/// writes per-strategy result files plus an accuracy summary.
inline CommandReport cmd_aggregate(const RunConfig& config) {
    const fs::path out = cmd_detail::require_out_dir(config);
    const fs::path records_path = out / "records.jsonl";
    if (!fs::exists(records_path))
        throw UsageError("no exploration records at " + records_path.string());
    const auto records = read_records(records_path);
    if (records.empty()) throw UsageError("record file is empty: " + records_path.string());

    RunLock lock(out);
    std::vector<Strategy> strategies;
    for (const auto& name : config.strategies) strategies.push_back(strategy_from_string(name));

    std::shared_ptr<ChatBackend> backend;
    const bool wants_lrm =
        std::find(strategies.begin(), strategies.end(), Strategy::lrm_summary) != strategies.end();
    if (wants_lrm) {
        if (config.mock_script.empty() && config.backend.base_url.empty())
            throw UsageError("lrm-summary requires a backend (mock_script or backend.base_url)");
        backend = make_backend(config);
    }

    fs::create_directories(out / "aggregate");
    write_manifest(make_manifest(config, backend ? backend->id() : "none", records.size(),
                                 records.size()),
                   out / "aggregate" / "manifest.json");

    CommandReport report;
    report.run_dir = out;
    const std::string summarizer =
        config.summarizer_model.empty() ? config.backend.model : config.summarizer_model;

    ojson summary_rows = ojson::array();
    for (const Strategy strategy : strategies) {
        RecordWriter writer(out / "aggregate" / (to_string(strategy) + ".jsonl"));
        long long correct = 0;
        long long total = 0;
        for (const auto& record : records) {
            AggregationResult result;
            try {
                switch (strategy) {
                    case Strategy::random_choice:
                        result = aggregate_random(
                            record.paths,
                            mix_seed(mix_seed(config.seed, "aggregate-random"), record.query.id));
                        break;
                    case Strategy::self_consistency:
                        result = aggregate_self_consistency(record.paths);
                        break;
                    case Strategy::best_of_n:
                        result = aggregate_bon(record.paths);
                        break;
                    case Strategy::lrm_summary: {
                        SamplingParams sampling = config.sampling;
                        sampling.n_samples = 1;
                        sampling.seed = static_cast<long long>(
                            mix_seed(mix_seed(config.seed, "aggregate-lrm"), record.query.id));
                        result = aggregate_lrm(record.query, record.paths, *backend, summarizer,
                                               sampling);
                        break;
                    }
                }
            } catch (const std::exception& e) {
                report.failures.push_back(record.query.id + " [" + to_string(strategy) +
                                          "]: " + e.what());
                continue;
            }
            ojson line{{"schema_version", kSchemaVersion},
                       {"query_id", record.query.id},
                       {"strategy", to_string(strategy)},
                       {"correct", result.correct}};
            if (result.chosen_answer) line["chosen_answer"] = *result.chosen_answer;
            if (result.chosen_path) line["chosen_path"] = *result.chosen_path;
            if (!result.votes.empty()) {
                ojson votes = ojson::array();
                for (const auto& v : result.votes)
                    votes.push_back(ojson{{"answer", v.answer},
                                          {"count", v.count},
                                          {"avg_completion_tokens", v.avg_completion_tokens}});
                line["votes"] = std::move(votes);
                line["tie_broken_by_length"] = result.tie_broken_by_length;
                line["tie_broken_lexicographic"] = result.tie_broken_lexicographic;
            }
            if (result.summary_text) line["summary_text"] = *result.summary_text;
            writer.write_line(line);
            if (result.correct) ++correct;
            ++total;
        }
        const double accuracy =
            total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
        summary_rows.push_back(ojson{{"strategy", to_string(strategy)},
                                     {"accuracy", accuracy},
                                     {"correct", correct},
                                     {"total", total}});
        report.summary.emplace_back(to_string(strategy), accuracy);
        report.records += static_cast<std::size_t>(total);
    }

    std::ofstream summary_out(out / "aggregate" / "summary.json", std::ios::trunc);
    summary_out << ojson{{"schema_version", kSchemaVersion},
                         {"queries", records.size()},
                         {"strategies", std::move(summary_rows)}}
                       .dump(2)
                << '\n';
    if (!summary_out) throw IoError("cannot write aggregate summary");
    return report;
}

// ----------------------------------------------------------------------------
// metrics
// ----------------------------------------------------------------------------

/// Computes curves, diversity statistics, the saturation profile, and (given a
/// baseline run) the cross-matrix and per-cell frequency distributions.
inline CommandReport cmd_metrics(const RunConfig& config) {
    const fs::path out = cmd_detail::require_out_dir(config);
    const fs::path records_path = out / "records.jsonl";
    if (!fs::exists(records_path))
        throw UsageError("no exploration records at " + records_path.string());
    const auto records = read_records(records_path);
    if (records.empty()) throw UsageError("record file is empty: " + records_path.string());

    RunLock lock(out);
    const auto samples = sample_sets_from_records(records);
    std::size_t min_n = samples.front().items.size();
    for (const auto& s : samples) min_n = std::min(min_n, s.items.size());

    std::vector<int> ks = config.ks.empty() ? default_ks(static_cast<int>(min_n)) : config.ks;
    for (int k : ks) {
        if (k < 1 || static_cast<std::size_t>(k) > min_n)
            throw UsageError("k=" + std::to_string(k) + " outside [1, " + std::to_string(min_n) +
                             "]");
    }

    fs::create_directories(out / "metrics");
    write_manifest(make_manifest(config, "none", records.size(), records.size()),
                   out / "metrics" / "manifest.json");

    MajOptions maj_options;
    maj_options.trials = config.maj_trials;
    maj_options.seed = mix_seed(config.seed, "maj-k");

    const auto pass = pass_curve(samples, ks);
    const auto maj = maj_curve(samples, ks, maj_options);

    ojson report_json{{"schema_version", kSchemaVersion},
                      {"queries", samples.size()},
                      {"ks", ks}};
    {
        ojson points = ojson::array();
        for (const auto& p : pass) points.push_back(cmd_detail::to_json(p));
        report_json["pass_curve"] = std::move(points);
    }
    {
        ojson points = ojson::array();
        for (const auto& p : maj) points.push_back(cmd_detail::to_json(p));
        report_json["maj_curve"] = std::move(points);
    }
    report_json["unique_answers"] = unique_answers(samples);
    if (const auto tokens = avg_correct_tokens(samples)) report_json["avg_correct_tokens"] = *tokens;
    {
        ojson profile = ojson::array();
        for (const auto& [i, rate] : saturation_profile(samples))
            profile.push_back(ojson{{"i", i}, {"new_answer_rate", rate}});
        report_json["saturation_profile"] = std::move(profile);
    }

    if (!config.baseline_dir.empty()) {
        const fs::path baseline_path = fs::path(config.baseline_dir) / "records.jsonl";
        if (!fs::exists(baseline_path))
            throw UsageError("no baseline records at " + baseline_path.string());
        const auto baseline_records = read_records(baseline_path);
        const auto a = cmd_detail::bon_verdicts(baseline_records);
        const auto b = cmd_detail::bon_verdicts(records);
        const CrossMatrix matrix = cross_matrix(a, b);
        report_json["cross_matrix"] = ojson{{"both_correct", matrix.both_correct},
                                            {"a_only", matrix.a_only},
                                            {"b_only", matrix.b_only},
                                            {"both_wrong", matrix.both_wrong}};
        std::set<std::string> a_only_ids;
        std::set<std::string> b_only_ids;
        for (const auto& [id, a_ok] : a) {
            const bool b_ok = b.at(id);
            if (a_ok && !b_ok) a_only_ids.insert(id);
            if (!a_ok && b_ok) b_only_ids.insert(id);
        }
        report_json["frequency_a_only"] = cmd_detail::to_json(
            correct_frequency_distribution(baseline_records, config.n, a_only_ids));
        report_json["frequency_b_only"] =
            cmd_detail::to_json(correct_frequency_distribution(records, config.n, b_only_ids));
    }

    std::ofstream report_out(out / "metrics" / "report.json", std::ios::trunc);
    report_out << report_json.dump(2) << '\n';
    if (!report_out) throw IoError("cannot write metrics report");

    std::ofstream csv(out / "metrics" / "curves.csv", std::ios::trunc);
    csv << "curve,k,value,stderr\n";
    auto dump_number = [](double v) { return ojson(v).dump(); };
    for (const auto& p : pass) csv << "pass," << p.k << "," << dump_number(p.value) << ",\n";
    for (const auto& p : maj) {
        csv << "maj," << p.k << "," << dump_number(p.value) << ","
            << (p.stderr_ ? dump_number(*p.stderr_) : "") << "\n";
    }
    if (!csv) throw IoError("cannot write curves.csv");

    CommandReport report;
    report.run_dir = out;
    report.records = records.size();
    return report;
}

// ----------------------------------------------------------------------------
// rlgen
// ----------------------------------------------------------------------------

/// Drives the phase schedule end to end, writing one training-record file per
/// step, the transition dataset per iteration, and a schedule event log.
inline CommandReport cmd_rlgen(const RunConfig& config) {
    const auto queries = cmd_detail::load_query_input(config);
    const fs::path out = cmd_detail::require_out_dir(config);
    RunLock lock(out);
    const auto backend = make_backend(config);
    const PromptTemplates tpl = load_templates(config);
    write_manifest(make_manifest(config, backend->id(), queries.size(), 0),
                   out / "manifest.json");
    fs::create_directories(out / "rl");

    CommandReport report;
    report.run_dir = out;
    const std::string digest = config_digest(config);

    RolloutOptions rollout;
    rollout.model = config.backend.model;
    rollout.sampling = config.sampling;
    rollout.max_concurrency = config.backend.max_concurrency;
    rollout.path_mode = config.path_prompt_mode;
    rollout.templates = &tpl;

    PhaseSchedule schedule;
    schedule.iterations = config.schedule.iterations;
    schedule.steps_plan = config.schedule.steps_plan;
    schedule.steps_reason = config.schedule.steps_reason;

    std::ofstream schedule_log(out / "rl" / "schedule.jsonl", std::ios::trunc);
    if (!schedule_log) throw IoError("cannot write schedule log");
    std::vector<ReasonTriple> triples;

    auto step_name = [](int iteration, const char* phase, int step) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "i%d-%s-s%03d", iteration, phase, step);
        return std::string(buf);
    };
    auto write_phase_file = [&](const std::string& name, const char* phase, int iteration,
                                int step, const std::vector<TrainingRecord>& records) {
        RecordWriter writer(out / "rl" / (name + ".jsonl"));
        writer.write_line(ojson{{"schema_version", kSchemaVersion},
                                {"type", "phase-header"},
                                {"phase", phase},
                                {"iteration", iteration},
                                {"step", step},
                                {"config_digest", digest}});
        for (const auto& r : records) writer.write_line(to_json(r));
        report.records += records.size();
    };

    while (!schedule.terminal()) {
        const auto [next, event] = advance_schedule(schedule);
        schedule = next;
        const char* kind = event.kind == ScheduleEvent::Kind::plan_step      ? "plan_step"
                           : event.kind == ScheduleEvent::Kind::reason_step ? "reason_step"
                                                                            : "transition";
        schedule_log << ojson{{"kind", kind},
                              {"iteration", event.iteration},
                              {"step", event.step},
                              {"phase_boundary", event.phase_boundary}}
                            .dump()
                     << '\n';

        if (event.kind == ScheduleEvent::Kind::plan_step) {
            PlanPhaseOptions opts;
            opts.rollout = rollout;
            opts.n = config.n;
            opts.k = config.k;
            opts.g = config.g;
            opts.granularity = config.plan_reward_granularity;
            opts.group_tag = step_name(event.iteration, "plan", event.step);
            opts.seed = mix_seed(mix_seed(config.seed, "rl-plan"),
                                 static_cast<std::uint64_t>(event.iteration) * 100000 +
                                     static_cast<std::uint64_t>(event.step));
            const auto output = run_plan_phase(queries, *backend, opts);
            write_phase_file(opts.group_tag, "plan", event.iteration, event.step, output.records);
            for (const auto& f : output.failed)
                report.failures.push_back(opts.group_tag + ": " + f);
        } else if (event.kind == ScheduleEvent::Kind::transition) {
            ReasonDatasetOptions opts;
            opts.rollout = rollout;
            opts.n = config.n;
            opts.max_attempts = config.backend.retry.max_attempts;
            opts.seed = mix_seed(mix_seed(config.seed, "rl-dataset"),
                                 static_cast<std::uint64_t>(event.iteration));
            const auto dataset = build_reason_dataset(queries, *backend, opts);
            triples = dataset.triples;
            write_reason_dataset(triples,
                                 out / "rl" /
                                     ("i" + std::to_string(event.iteration) +
                                      "-reason-dataset.jsonl"));
            for (const auto& id : dataset.skipped)
                report.failures.push_back("i" + std::to_string(event.iteration) +
                                          "-dataset: " + id);
        } else {
            ReasonPhaseOptions opts;
            opts.rollout = rollout;
            opts.g = config.g;
            opts.group_tag = step_name(event.iteration, "reason", event.step);
            opts.seed = mix_seed(mix_seed(config.seed, "rl-reason"),
                                 static_cast<std::uint64_t>(event.iteration) * 100000 +
                                     static_cast<std::uint64_t>(event.step));
            const auto output = run_reason_phase(triples, *backend, opts);
            write_phase_file(opts.group_tag, "reason", event.iteration, event.step,
                             output.records);
            for (const auto& f : output.failed)
                report.failures.push_back(opts.group_tag + ": " + f);
        }
    }
    if (!schedule_log) throw IoError("schedule log write failed");

    write_manifest(make_manifest(config, backend->id(), queries.size(), report.records),
                   out / "manifest.json");
    return report;
}

// ----------------------------------------------------------------------------
// synth
// ----------------------------------------------------------------------------

/// Cold-start rejection sampling: accepted trajectories land in records.jsonl,
/// rejected queries in rejections.jsonl.
inline CommandReport cmd_synth(const RunConfig& config) {
    const auto queries = cmd_detail::load_query_input(config);
    const fs::path out = cmd_detail::require_out_dir(config);
    RunLock lock(out);
    const auto backend = make_backend(config);
    const PromptTemplates tpl = load_templates(config);
    write_manifest(make_manifest(config, backend->id(), queries.size(), 0),
                   out / "manifest.json");

    ColdStartOptions opts;
    opts.rollout.model = config.backend.model;
    opts.rollout.sampling = config.sampling;
    opts.rollout.max_concurrency = config.backend.max_concurrency;
    opts.rollout.path_mode = config.path_prompt_mode;
    opts.rollout.templates = &tpl;
    opts.n = config.n;
    opts.max_attempts = config.synth_max_attempts;
    opts.accept = config.accept;
    opts.seed = config.seed;
    opts.run_id = run_id_for(config);

    const auto result = cold_start_synthesize(queries, *backend, opts);

    CommandReport report;
    report.run_dir = out;
    report.records = write_records(result.accepted, out / "records.jsonl");
    for (const auto& r : result.accepted) report.paths += r.paths.size();

    RecordWriter rejections(out / "rejections.jsonl");
    for (const auto& [id, attempts] : result.rejections) {
        rejections.write_line(ojson{{"query_id", id}, {"attempts", attempts}});
        report.failures.push_back(id + ": rejected after " + std::to_string(attempts) +
                                  " attempts");
    }

    write_manifest(make_manifest(config, backend->id(), queries.size(), report.records),
                   out / "manifest.json");
    return report;
}

}  // namespace ope

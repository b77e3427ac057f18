#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ope/backend.hpp"
#include "ope/common.hpp"
#include "ope/model.hpp"
#include "ope/prompting.hpp"
#include "ope/verifier.hpp"

namespace ope {

// ----------------------------------------------------------------------------
// Rewards
// ----------------------------------------------------------------------------

/// Mean accuracy over the full N x K path matrix of one outline set.
inline double reward_plan_set(const std::vector<std::vector<bool>>& verdicts) {
    if (verdicts.empty() || verdicts.front().empty())
        throw std::invalid_argument("reward_plan_set: empty verdict matrix");
    long long correct = 0;
    long long total = 0;
    const std::size_t k = verdicts.front().size();
    for (const auto& row : verdicts) {
        if (row.size() != k) throw std::invalid_argument("reward_plan_set: ragged verdict matrix");
        for (bool v : row) {
            if (v) ++correct;
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

/// Per-outline mean accuracy over its K paths.
inline double reward_plan_outline(const std::vector<bool>& verdicts) {
    if (verdicts.empty()) throw std::invalid_argument("reward_plan_outline: empty verdict row");
    long long correct = 0;
    for (bool v : verdicts)
        if (v) ++correct;
    return static_cast<double>(correct) / static_cast<double>(verdicts.size());
}

/// Binary verifiable-outcome reward for one path.
inline double reward_reason(bool verdict) { return verdict ? 1.0 : 0.0; }

// ----------------------------------------------------------------------------
// Group-relative advantages
// ----------------------------------------------------------------------------

/// Standardizes a reward group: A_i = (r_i - mean) / std, with population
/// standard deviation. All-equal groups yield all-zero advantages instead of
/// dividing by zero.
inline std::vector<double> grpo_advantages(const std::vector<double>& rewards) {
    const std::size_t g = rewards.size();
    if (g < 2) throw std::invalid_argument("grpo_advantages: group size must be >= 2");
    double mean = 0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);
    double variance = 0;
    for (double r : rewards) variance += (r - mean) * (r - mean);
    variance /= static_cast<double>(g);
    const double sd = std::sqrt(variance);
    std::vector<double> advantages(g, 0.0);
    if (sd == 0.0) return advantages;
    for (std::size_t i = 0; i < g; ++i) advantages[i] = (rewards[i] - mean) / sd;
    return advantages;
}

// ----------------------------------------------------------------------------
// Phase schedule
// ----------------------------------------------------------------------------

enum class Phase { plan, transition, reason, done };

inline std::string to_string(Phase p) {
    switch (p) {
        case Phase::plan: return "plan";
        case Phase::transition: return "transition";
        case Phase::reason: return "reason";
        default: return "done";
    }
}

/// The iterative training clock: plan steps, a dataset-building transition,
/// reason steps, repeated for a fixed number of iterations.
struct PhaseSchedule {
    int iterations = 2;
    int steps_plan = 70;
    int steps_reason = 65;

    int iteration = 1;
    Phase phase = Phase::plan;
    int step = 0;

    bool terminal() const { return phase == Phase::done; }
    int total_training_steps() const { return iterations * (steps_plan + steps_reason); }
};

struct ScheduleEvent {
    enum class Kind { plan_step, transition, reason_step };
    Kind kind = Kind::plan_step;
    int iteration = 1;
    int step = 0;
    /// True when this advance crossed into a different training phase.
    bool phase_boundary = false;
};

/// One tick of the state machine. Plan and reason advances are training steps;
/// the transition advance builds the reason dataset and counts as no step.
inline std::pair<PhaseSchedule, ScheduleEvent> advance_schedule(PhaseSchedule s) {
    if (s.terminal()) throw Error("advance_schedule: schedule is terminal");
    if (s.iterations < 1 || s.steps_plan < 1 || s.steps_reason < 1)
        throw std::invalid_argument("advance_schedule: iterations and step budgets must be >= 1");
    ScheduleEvent ev;
    ev.iteration = s.iteration;
    switch (s.phase) {
        case Phase::plan:
            s.step += 1;
            ev.kind = ScheduleEvent::Kind::plan_step;
            ev.step = s.step;
            if (s.step >= s.steps_plan) {
                s.phase = Phase::transition;
                s.step = 0;
            }
            break;
        case Phase::transition:
            ev.kind = ScheduleEvent::Kind::transition;
            ev.step = 0;
            ev.phase_boundary = true;  // entering reason
            s.phase = Phase::reason;
            s.step = 0;
            break;
        case Phase::reason:
            s.step += 1;
            ev.kind = ScheduleEvent::Kind::reason_step;
            ev.step = s.step;
            if (s.step >= s.steps_reason) {
                if (s.iteration < s.iterations) {
                    s.iteration += 1;
                    s.phase = Phase::plan;
                    s.step = 0;
                    ev.phase_boundary = true;  // entering the next iteration's plan
                } else {
                    s.phase = Phase::done;
                }
            }
            break;
        case Phase::done:
            break;
    }
    return {s, ev};
}

// ----------------------------------------------------------------------------
// Training records
// ----------------------------------------------------------------------------

enum class PlanRewardGranularity { set, outline };

inline std::string to_string(PlanRewardGranularity g) {
    return g == PlanRewardGranularity::set ? "set" : "outline";
}

inline PlanRewardGranularity plan_granularity_from_string(std::string_view s) {
    if (s == "set") return PlanRewardGranularity::set;
    if (s == "outline") return PlanRewardGranularity::outline;
    throw ParseError("unknown plan reward granularity: " + std::string(s));
}

/// Enough state to recompute the reward from the record alone.
struct TrainingMeta {
    int n = 0;
    int k = 0;
    int g = 0;
    long long seed = 0;
    std::string granularity;  // plan records only
    std::string std_mode = "population";
    std::optional<double> reward_set;
    std::vector<double> rewards_outline;
    std::vector<std::vector<bool>> verdicts;
    std::optional<int> outline_index;
    bool parse_failed = false;
};

struct TrainingRecord {
    std::string phase;  // "plan" | "reason"
    std::string query_id;
    std::string group_id;
    std::string input;   // full prompt text, standalone
    std::string output;
    double reward = 0;
    double advantage = 0;
    TrainingMeta meta;
};

/// Recomputes the reward from the stored verdicts (records are self-verifying).
inline double recompute_reward(const TrainingRecord& r) {
    long long correct = 0;
    long long total = 0;
    for (const auto& row : r.meta.verdicts) {
        for (bool v : row) {
            if (v) ++correct;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

inline ojson to_json(const TrainingRecord& r) {
    ojson meta{{"n", r.meta.n}, {"k", r.meta.k}, {"g", r.meta.g}, {"seed", r.meta.seed}};
    if (!r.meta.granularity.empty()) meta["granularity"] = r.meta.granularity;
    meta["std_mode"] = r.meta.std_mode;
    if (r.meta.reward_set) meta["reward_set"] = *r.meta.reward_set;
    if (!r.meta.rewards_outline.empty()) meta["rewards_outline"] = r.meta.rewards_outline;
    meta["verdicts"] = r.meta.verdicts;
    if (r.meta.outline_index) meta["outline_index"] = *r.meta.outline_index;
    if (r.meta.parse_failed) meta["parse_failed"] = true;
    return ojson{{"schema_version", kSchemaVersion},
                 {"phase", r.phase},
                 {"query_id", r.query_id},
                 {"group_id", r.group_id},
                 {"input", r.input},
                 {"output", r.output},
                 {"reward", r.reward},
                 {"advantage", r.advantage},
                 {"metadata", std::move(meta)}};
}

inline TrainingRecord training_record_from_json(const nlohmann::json& j) {
    detail::check_schema_version(j);
    TrainingRecord r;
    r.phase = detail::require<std::string>(j, "phase");
    r.query_id = detail::require<std::string>(j, "query_id");
    r.group_id = detail::require<std::string>(j, "group_id");
    r.input = detail::require<std::string>(j, "input");
    r.output = detail::require<std::string>(j, "output");
    r.reward = detail::require<double>(j, "reward");
    r.advantage = detail::require<double>(j, "advantage");
    const auto meta = detail::require<nlohmann::json>(j, "metadata");
    r.meta.n = detail::require<int>(meta, "n");
    r.meta.k = detail::require<int>(meta, "k");
    r.meta.g = detail::require<int>(meta, "g");
    r.meta.seed = detail::require<long long>(meta, "seed");
    if (auto g = detail::maybe<std::string>(meta, "granularity")) r.meta.granularity = *g;
    r.meta.std_mode = detail::require<std::string>(meta, "std_mode");
    r.meta.reward_set = detail::maybe<double>(meta, "reward_set");
    if (auto ro = detail::maybe<std::vector<double>>(meta, "rewards_outline"))
        r.meta.rewards_outline = *ro;
    r.meta.verdicts = detail::require<std::vector<std::vector<bool>>>(meta, "verdicts");
    r.meta.outline_index = detail::maybe<int>(meta, "outline_index");
    if (auto pf = detail::maybe<bool>(meta, "parse_failed")) r.meta.parse_failed = *pf;
    return r;
}

// ----------------------------------------------------------------------------
// Rollout phases
// ----------------------------------------------------------------------------

/// Knobs shared by every rollout driver.
struct RolloutOptions {
    std::string model;
    SamplingParams sampling;
    int max_concurrency = 8;
    PathPromptMode path_mode = PathPromptMode::full_block;
    const PromptTemplates* templates = nullptr;

    const PromptTemplates& tpl() const {
        return templates ? *templates : PromptTemplates::defaults();
    }
};

struct PhaseOutput {
    std::vector<TrainingRecord> records;
    std::vector<std::string> failed;  // query ids (or query#outline) skipped after retries
};

struct PlanPhaseOptions {
    RolloutOptions rollout;
    int n = 4;
    int k = 4;
    int g = 8;
    std::uint64_t seed = 0;
    PlanRewardGranularity granularity = PlanRewardGranularity::set;
    std::string group_tag = "plan";
};

/// One planning-RL step over a query batch: per query, G outline-set rollouts,
/// K paths per outline for reward estimation, group-relative advantages over
/// the G generations. Unparseable generations stay in the group at reward 0.
inline PhaseOutput run_plan_phase(const std::vector<Query>& queries, ChatBackend& backend,
                                  const PlanPhaseOptions& opts) {
    PhaseOutput out;
    const PromptTemplates& tpl = opts.rollout.tpl();

    for (const auto& q : queries) {
        const std::uint64_t qseed = mix_seed(mix_seed(opts.seed, q.id), opts.group_tag);
        const PromptBundle planning = build_planning_prompt(q, opts.n, tpl);
        SamplingParams plan_sampling = opts.rollout.sampling;
        plan_sampling.seed = static_cast<long long>(mix_seed(qseed, "plan"));
        plan_sampling.n_samples = opts.g;

        ChatResponse plan_resp;
        try {
            plan_resp = backend.complete(
                make_request(opts.rollout.model, planning, plan_sampling, opts.g));
        } catch (const std::exception&) {
            out.failed.push_back(q.id);
            continue;
        }

        struct Generation {
            std::string raw;
            std::optional<OutlineSet> set;
            std::vector<std::vector<bool>> verdicts;
            double reward_set = 0;
            std::vector<double> rewards_outline;
        };
        std::vector<Generation> gens(static_cast<std::size_t>(opts.g));

        // path requests for every parsed generation, flattened
        std::vector<ChatRequest> path_requests;
        std::vector<std::pair<int, int>> request_slots;  // (generation, outline index)
        for (int g = 0; g < opts.g; ++g) {
            auto& gen = gens[static_cast<std::size_t>(g)];
            gen.raw = plan_resp.completions[static_cast<std::size_t>(g)].content;
            try {
                gen.set = parse_outlines(gen.raw, opts.n, q.id);
            } catch (const OutlineParseError&) {
                continue;  // reward 0, stays in the group
            }
            for (int i = 1; i <= opts.n; ++i) {
                SamplingParams path_sampling = opts.rollout.sampling;
                path_sampling.seed = static_cast<long long>(mix_seed(
                    mix_seed(qseed, "path"),
                    static_cast<std::uint64_t>(g) * 1009 + static_cast<std::uint64_t>(i)));
                path_sampling.n_samples = opts.k;
                path_requests.push_back(make_request(
                    opts.rollout.model,
                    build_path_prompt(q, *gen.set, i, opts.rollout.path_mode, tpl), path_sampling,
                    opts.k));
                request_slots.emplace_back(g, i);
            }
        }

        bool query_failed = false;
        if (!path_requests.empty()) {
            const auto batch = sample_paths(backend, path_requests, opts.rollout.max_concurrency);
            for (std::size_t r = 0; r < batch.size(); ++r) {
                if (!batch[r].ok()) {
                    query_failed = true;
                    break;
                }
                const auto [g, i] = request_slots[r];
                auto& gen = gens[static_cast<std::size_t>(g)];
                if (gen.verdicts.empty())
                    gen.verdicts.assign(static_cast<std::size_t>(opts.n), {});
                std::vector<bool> row;
                for (const auto& completion : batch[r].response->completions) {
                    ReasoningPath p = path_from_completion(completion, q.id, Mode::ope, i);
                    p = verify_path(std::move(p), q.ground_truth);
                    row.push_back(p.correct.value_or(false));
                }
                gen.verdicts[static_cast<std::size_t>(i - 1)] = std::move(row);
            }
        }
        if (query_failed) {
            out.failed.push_back(q.id);
            continue;
        }

        for (auto& gen : gens) {
            if (!gen.set || gen.verdicts.empty()) continue;
            gen.reward_set = reward_plan_set(gen.verdicts);
            for (const auto& row : gen.verdicts)
                gen.rewards_outline.push_back(reward_plan_outline(row));
        }

        const std::string group_id = q.id + "#" + opts.group_tag;
        auto base_meta = [&](const Generation& gen) {
            TrainingMeta meta;
            meta.n = opts.n;
            meta.k = opts.k;
            meta.g = opts.g;
            meta.seed = static_cast<long long>(qseed);
            meta.granularity = to_string(opts.granularity);
            meta.rewards_outline = gen.rewards_outline;
            meta.parse_failed = !gen.set.has_value();
            if (gen.set) meta.reward_set = gen.reward_set;
            return meta;
        };

        if (opts.granularity == PlanRewardGranularity::set) {
            std::vector<double> rewards;
            rewards.reserve(gens.size());
            for (const auto& gen : gens) rewards.push_back(gen.reward_set);
            const auto advantages = grpo_advantages(rewards);
            for (std::size_t g = 0; g < gens.size(); ++g) {
                const auto& gen = gens[g];
                TrainingRecord rec;
                rec.phase = "plan";
                rec.query_id = q.id;
                rec.group_id = group_id;
                rec.input = render_prompt_text(planning);
                rec.output = gen.raw;
                rec.reward = rewards[g];
                rec.advantage = advantages[g];
                rec.meta = base_meta(gen);
                rec.meta.verdicts = gen.verdicts;
                out.records.push_back(std::move(rec));
            }
        } else {
            // alternative grouping: all G*N outlines of a query form one group
            std::vector<double> rewards;
            for (const auto& gen : gens) {
                for (int i = 0; i < opts.n; ++i) {
                    rewards.push_back(gen.set ? gen.rewards_outline[static_cast<std::size_t>(i)]
                                              : 0.0);
                }
            }
            const auto advantages = grpo_advantages(rewards);
            std::size_t slot = 0;
            for (const auto& gen : gens) {
                for (int i = 1; i <= opts.n; ++i, ++slot) {
                    TrainingRecord rec;
                    rec.phase = "plan";
                    rec.query_id = q.id;
                    rec.group_id = group_id;
                    rec.input = render_prompt_text(planning);
                    rec.output =
                        gen.set ? gen.set->outlines[static_cast<std::size_t>(i - 1)].text : "";
                    rec.reward = rewards[slot];
                    rec.advantage = advantages[slot];
                    rec.meta = base_meta(gen);
                    rec.meta.outline_index = i;
                    if (gen.set && !gen.verdicts.empty())
                        rec.meta.verdicts = {gen.verdicts[static_cast<std::size_t>(i - 1)]};
                    out.records.push_back(std::move(rec));
                }
            }
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Reason dataset (the transition between phases)
// ----------------------------------------------------------------------------

struct ReasonTriple {
    Query query;
    Outline outline;
};

inline ojson to_json(const ReasonTriple& t) {
    return ojson{{"schema_version", kSchemaVersion},
                 {"query", to_json(t.query)},
                 {"outline", ojson{{"index", t.outline.index}, {"text", t.outline.text}}}};
}

inline ReasonTriple reason_triple_from_json(const nlohmann::json& j) {
    detail::check_schema_version(j);
    ReasonTriple t;
    t.query = query_from_json(detail::require<nlohmann::json>(j, "query"));
    const auto oj = detail::require<nlohmann::json>(j, "outline");
    t.outline.index = detail::require<int>(oj, "index");
    t.outline.text = detail::require<std::string>(oj, "text");
    return t;
}

inline std::size_t write_reason_dataset(const std::vector<ReasonTriple>& triples,
                                        const std::filesystem::path& path) {
    RecordWriter writer(path);
    for (const auto& t : triples) writer.write_line(to_json(t));
    return writer.count();
}

inline std::vector<ReasonTriple> read_reason_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reason dataset: " + path.string());
    std::vector<ReasonTriple> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(reason_triple_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

struct ReasonDatasetOptions {
    RolloutOptions rollout;
    int n = 4;
    int max_attempts = 4;
    std::uint64_t seed = 0;
};

struct ReasonDataset {
    std::vector<ReasonTriple> triples;
    std::vector<std::string> skipped;
};

/// One outline-set generation per query with the current backend; N triples
/// per query. Parse failures retry with fresh seeds, then skip.
inline ReasonDataset build_reason_dataset(const std::vector<Query>& queries, ChatBackend& backend,
                                          const ReasonDatasetOptions& opts) {
    ReasonDataset out;
    const PromptTemplates& tpl = opts.rollout.tpl();
    for (const auto& q : queries) {
        const PromptBundle planning = build_planning_prompt(q, opts.n, tpl);
        bool done = false;
        for (int attempt = 1; attempt <= opts.max_attempts && !done; ++attempt) {
            SamplingParams sampling = opts.rollout.sampling;
            sampling.seed = static_cast<long long>(mix_seed(
                mix_seed(opts.seed, q.id), static_cast<std::uint64_t>(attempt) + 7700));
            sampling.n_samples = 1;
            try {
                const auto resp =
                    backend.complete(make_request(opts.rollout.model, planning, sampling, 1));
                const auto set = parse_outlines(resp.completions.front().content, opts.n, q.id);
                for (const auto& o : set.outlines) out.triples.push_back(ReasonTriple{q, o});
                done = true;
            } catch (const std::exception&) {
                // retry with a fresh seed
            }
        }
        if (!done) out.skipped.push_back(q.id);
    }
    return out;
}

// ----------------------------------------------------------------------------
// Reason phase
// ----------------------------------------------------------------------------

struct ReasonPhaseOptions {
    RolloutOptions rollout;
    int g = 8;
    std::uint64_t seed = 0;
    std::string group_tag = "reason";
};

/// One reasoning-RL step: per (query, outline) pair, G paths from the
/// [query, outline, path-token] input, binary rewards, group advantages.
inline PhaseOutput run_reason_phase(const std::vector<ReasonTriple>& triples, ChatBackend& backend,
                                    const ReasonPhaseOptions& opts) {
    PhaseOutput out;
    const PromptTemplates& tpl = opts.rollout.tpl();
    for (const auto& t : triples) {
        const std::string slot_id = t.query.id + "#" + std::to_string(t.outline.index);
        const PromptBundle prompt = build_reason_prompt(t.query, t.outline, tpl);
        SamplingParams sampling = opts.rollout.sampling;
        sampling.seed = static_cast<long long>(mix_seed(
            mix_seed(mix_seed(opts.seed, t.query.id), opts.group_tag),
            static_cast<std::uint64_t>(t.outline.index)));
        sampling.n_samples = opts.g;

        ChatResponse resp;
        try {
            resp = backend.complete(make_request(opts.rollout.model, prompt, sampling, opts.g));
        } catch (const std::exception&) {
            out.failed.push_back(slot_id);
            continue;
        }

        std::vector<double> rewards;
        std::vector<ReasoningPath> paths;
        for (const auto& completion : resp.completions) {
            ReasoningPath p =
                path_from_completion(completion, t.query.id, Mode::ope, t.outline.index);
            p = verify_path(std::move(p), t.query.ground_truth);
            rewards.push_back(reward_reason(p.correct.value_or(false)));
            paths.push_back(std::move(p));
        }
        const auto advantages = grpo_advantages(rewards);
        for (std::size_t i = 0; i < paths.size(); ++i) {
            TrainingRecord rec;
            rec.phase = "reason";
            rec.query_id = t.query.id;
            rec.group_id = slot_id + "#" + opts.group_tag;
            rec.input = render_prompt_text(prompt);
            rec.output = paths[i].text;
            rec.reward = rewards[i];
            rec.advantage = advantages[i];
            rec.meta.n = 1;
            rec.meta.k = 1;
            rec.meta.g = opts.g;
            rec.meta.seed = sampling.seed;
            rec.meta.verdicts = {{rewards[i] == 1.0}};
            rec.meta.outline_index = t.outline.index;
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Cold-start synthesis (rejection sampling)
// ----------------------------------------------------------------------------

enum class AcceptCriterion { any_path_correct, all_present_one_correct };

inline std::string to_string(AcceptCriterion c) {
    return c == AcceptCriterion::any_path_correct ? "any-correct" : "all-present-one-correct";
}

inline AcceptCriterion accept_criterion_from_string(std::string_view s) {
    if (s == "any-correct") return AcceptCriterion::any_path_correct;
    if (s == "all-present-one-correct") return AcceptCriterion::all_present_one_correct;
    throw ParseError("unknown accept criterion: " + std::string(s));
}

struct ColdStartOptions {
    RolloutOptions rollout;
    int n = 4;
    int max_attempts = 3;
    AcceptCriterion accept = AcceptCriterion::any_path_correct;
    std::uint64_t seed = 0;
    std::string run_id;
};

struct ColdStartResult {
    std::vector<ExplorationRecord> accepted;
    std::vector<std::pair<std::string, int>> rejections;  // (query id, attempts)
};

/// Per query: generate an outline set plus one path per outline, verify, and
/// keep the trajectory only if the acceptance criterion holds. Retries with
/// fresh seeds up to max_attempts; failures land in the rejection report.
inline ColdStartResult cold_start_synthesize(const std::vector<Query>& queries,
                                             ChatBackend& backend, const ColdStartOptions& opts) {
    ColdStartResult out;
    const PromptTemplates& tpl = opts.rollout.tpl();
    for (const auto& q : queries) {
        bool accepted = false;
        for (int attempt = 1; attempt <= opts.max_attempts && !accepted; ++attempt) {
            const std::uint64_t aseed = mix_seed(
                mix_seed(opts.seed, q.id), static_cast<std::uint64_t>(attempt) + 31);
            SamplingParams plan_sampling = opts.rollout.sampling;
            plan_sampling.seed = static_cast<long long>(mix_seed(aseed, "plan"));
            plan_sampling.n_samples = 1;

            OutlineSet set;
            try {
                const auto resp = backend.complete(make_request(
                    opts.rollout.model, build_planning_prompt(q, opts.n, tpl), plan_sampling, 1));
                set = parse_outlines(resp.completions.front().content, opts.n, q.id);
            } catch (const std::exception&) {
                continue;
            }

            std::vector<ChatRequest> requests;
            for (int i = 1; i <= opts.n; ++i) {
                SamplingParams path_sampling = opts.rollout.sampling;
                path_sampling.seed = static_cast<long long>(
                    mix_seed(mix_seed(aseed, "path"), static_cast<std::uint64_t>(i)));
                path_sampling.n_samples = 1;
                requests.push_back(make_request(
                    opts.rollout.model,
                    build_path_prompt(q, set, i, opts.rollout.path_mode, tpl), path_sampling, 1));
            }
            const auto batch = sample_paths(backend, requests, opts.rollout.max_concurrency);
            std::vector<ReasoningPath> paths;
            bool all_present = true;
            for (std::size_t r = 0; r < batch.size(); ++r) {
                if (!batch[r].ok()) {
                    all_present = false;
                    break;
                }
                ReasoningPath p = path_from_completion(batch[r].response->completions.front(),
                                                       q.id, Mode::ope, static_cast<int>(r) + 1);
                if (p.text.empty()) all_present = false;
                paths.push_back(verify_path(std::move(p), q.ground_truth));
            }
            if (paths.size() != static_cast<std::size_t>(opts.n)) continue;

            bool any_correct = false;
            for (const auto& p : paths) any_correct |= p.correct.value_or(false);
            const bool ok = opts.accept == AcceptCriterion::any_path_correct
                                ? any_correct
                                : (all_present && any_correct);
            if (!ok) continue;

            ExplorationRecord record;
            record.query = q;
            record.mode = Mode::ope;
            record.outline_set = std::move(set);
            record.paths = std::move(paths);
            record.sampling = opts.rollout.sampling;
            record.sampling.n_samples = 1;
            record.sampling.seed = static_cast<long long>(aseed);
            record.run_id = opts.run_id;
            validate(record);
            out.accepted.push_back(std::move(record));
            accepted = true;
        }
        if (!accepted) out.rejections.emplace_back(q.id, opts.max_attempts);
    }
    return out;
}

}  // namespace ope

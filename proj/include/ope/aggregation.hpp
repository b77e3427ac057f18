#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ope/backend.hpp"
#include "ope/common.hpp"
#include "ope/model.hpp"
#include "ope/prompting.hpp"
#include "ope/verifier.hpp"

namespace ope {

enum class Strategy { random_choice, self_consistency, best_of_n, lrm_summary };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::random_choice: return "random";
        case Strategy::self_consistency: return "self-consistency";
        case Strategy::best_of_n: return "best-of-n";
        default: return "lrm-summary";
    }
}

inline Strategy strategy_from_string(std::string_view s) {
    if (s == "random") return Strategy::random_choice;
    if (s == "self-consistency" || s == "sc") return Strategy::self_consistency;
    if (s == "best-of-n" || s == "bon") return Strategy::best_of_n;
    if (s == "lrm-summary" || s == "lrm") return Strategy::lrm_summary;
    throw ParseError("unknown aggregation strategy: " + std::string(s));
}

struct Vote {
    std::string answer;
    long long count = 0;
    double avg_completion_tokens = 0;
};

struct AggregationResult {
    Strategy strategy = Strategy::random_choice;
    std::optional<std::string> chosen_answer;
    bool correct = false;
    std::vector<Vote> votes;                   // self-consistency only
    std::optional<std::string> summary_text;   // lrm-summary only
    std::optional<std::size_t> chosen_path;    // random only
    bool tie_broken_by_length = false;
    bool tie_broken_lexicographic = false;
};

// ----------------------------------------------------------------------------
// Majority-vote kernel
// ----------------------------------------------------------------------------
//
// One implementation of the tie rules, shared by aggregate_self_consistency
// and the Maj@k estimator: most votes wins; ties go to the answer with the
// larger average completion length; residual ties to the lexicographically
// least canonical answer.

namespace vote_detail {

struct Group {
    std::string answer;
    long long count = 0;
    long long token_sum = 0;
    bool correct = false;
};

/// avg_i > avg_j by exact cross-multiplication (token counts are integers).
inline bool longer_avg(const Group& a, const Group& b) {
    return static_cast<double>(a.token_sum) * static_cast<double>(b.count) >
           static_cast<double>(b.token_sum) * static_cast<double>(a.count);
}

struct Decision {
    std::optional<std::size_t> winner;
    bool tie_by_length = false;
    bool tie_lexicographic = false;
};

inline Decision decide(const std::vector<Group>& groups) {
    Decision d;
    if (groups.empty()) return d;
    std::size_t best = 0;
    for (std::size_t i = 1; i < groups.size(); ++i) {
        const Group& g = groups[i];
        const Group& w = groups[best];
        if (g.count > w.count) {
            best = i;
        } else if (g.count == w.count) {
            if (longer_avg(g, w)) {
                best = i;
            } else if (!longer_avg(w, g) && g.answer < w.answer) {
                best = i;
            }
        }
    }
    d.winner = best;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (i == best) continue;
        if (groups[i].count == groups[best].count) {
            d.tie_by_length = true;
            if (!longer_avg(groups[best], groups[i]) && !longer_avg(groups[i], groups[best]))
                d.tie_lexicographic = true;
        }
    }
    return d;
}

/// Accumulates one answer-bearing vote into the running groups.
class GroupBuilder {
public:
    void add(const std::string& answer, long long tokens, bool correct) {
        Group& g = by_answer_[answer];
        g.answer = answer;
        g.count += 1;
        g.token_sum += tokens;
        if (correct) g.correct = true;
    }

    std::vector<Group> take() {
        std::vector<Group> out;
        out.reserve(by_answer_.size());
        for (auto& [_, g] : by_answer_) out.push_back(std::move(g));
        by_answer_.clear();
        return out;
    }

private:
    std::map<std::string, Group> by_answer_;
};

}  // namespace vote_detail

// ----------------------------------------------------------------------------
// Strategies
// ----------------------------------------------------------------------------

/// Picks one path uniformly (answerless paths included; they score false).
/// Deterministic given the seed.
inline AggregationResult aggregate_random(const std::vector<ReasoningPath>& paths,
                                          std::uint64_t seed) {
    if (paths.empty()) throw std::invalid_argument("aggregate_random: empty path set");
    AggregationResult r;
    r.strategy = Strategy::random_choice;
    const std::size_t pick =
        static_cast<std::size_t>(splitmix64(seed) % static_cast<std::uint64_t>(paths.size()));
    r.chosen_path = pick;
    const ReasoningPath& p = paths[pick];
    if (p.canonical_answer) r.chosen_answer = *p.canonical_answer;
    r.correct = p.correct.value_or(false);
    return r;
}

/// Majority voting across answer-bearing paths. With no answer-bearing path
/// the result has no chosen answer and scores false.
inline AggregationResult aggregate_self_consistency(const std::vector<ReasoningPath>& paths) {
    AggregationResult r;
    r.strategy = Strategy::self_consistency;
    vote_detail::GroupBuilder builder;
    for (const auto& p : paths) {
        if (!p.canonical_answer) continue;
        builder.add(*p.canonical_answer, p.completion_tokens, p.correct.value_or(false));
    }
    const auto groups = builder.take();
    const auto decision = vote_detail::decide(groups);
    for (const auto& g : groups)
        r.votes.push_back(Vote{g.answer, g.count,
                               static_cast<double>(g.token_sum) / static_cast<double>(g.count)});
    std::sort(r.votes.begin(), r.votes.end(), [](const Vote& a, const Vote& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.avg_completion_tokens != b.avg_completion_tokens)
            return a.avg_completion_tokens > b.avg_completion_tokens;
        return a.answer < b.answer;
    });
    if (decision.winner) {
        const auto& w = groups[*decision.winner];
        r.chosen_answer = w.answer;
        r.correct = w.correct;
        r.tie_broken_by_length = decision.tie_by_length;
        r.tie_broken_lexicographic = decision.tie_lexicographic;
    }
    return r;
}

/// Oracle upper bound: correct iff any path verified true.
inline AggregationResult aggregate_bon(const std::vector<ReasoningPath>& paths) {
    AggregationResult r;
    r.strategy = Strategy::best_of_n;
    for (const auto& p : paths) {
        if (p.correct.value_or(false)) {
            r.correct = true;
            if (p.canonical_answer) r.chosen_answer = *p.canonical_answer;
            break;
        }
    }
    return r;
}

/// Summarizer round-trip: builds the summary prompt, requests one completion,
/// verifies its boxed answer. Backend errors propagate to the caller.
inline AggregationResult aggregate_lrm(const Query& query,
                                       const std::vector<ReasoningPath>& paths,
                                       ChatBackend& backend, const std::string& summarizer_model,
                                       SamplingParams sampling,
                                       const PromptTemplates& tpl = PromptTemplates::defaults()) {
    if (paths.empty()) throw std::invalid_argument("aggregate_lrm: empty path set");
    AggregationResult r;
    r.strategy = Strategy::lrm_summary;
    const auto prompt = build_summary_prompt(query, paths, tpl);
    const auto response = backend.complete(make_request(summarizer_model, prompt, sampling, 1));
    if (response.completions.empty()) throw ProtocolError("summarizer returned no completion");
    const std::string& summary = response.completions.front().content;
    r.summary_text = summary;
    if (const auto boxed = extract_boxed(summary)) {
        const CanonicalAnswer answer = canonicalize(*boxed);
        r.chosen_answer = answer.str();
        r.correct = answers_equal(answer, canonicalize(query.ground_truth));
    }
    return r;
}

}  // namespace ope

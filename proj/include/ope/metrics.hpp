#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ope/aggregation.hpp"
#include "ope/common.hpp"
#include "ope/model.hpp"
#include "ope/verifier.hpp"

namespace ope {

// ----------------------------------------------------------------------------
// Sample pools
// ----------------------------------------------------------------------------

/// One item of a query's sampling pool, in sampling order.
struct SampleItem {
    std::optional<std::string> canonical_answer;
    bool correct = false;
    long long completion_tokens = 0;
};

struct SampleSet {
    std::string query_id;
    std::vector<SampleItem> items;

    long long correct_count() const {
        long long c = 0;
        for (const auto& it : items)
            if (it.correct) ++c;
        return c;
    }
};

inline SampleSet sample_set_from_record(const ExplorationRecord& r) {
    SampleSet s;
    s.query_id = r.query.id;
    for (const auto& p : r.paths)
        s.items.push_back(SampleItem{p.canonical_answer, p.correct.value_or(false),
                                     p.completion_tokens});
    return s;
}

inline std::vector<SampleSet> sample_sets_from_records(const std::vector<ExplorationRecord>& rs) {
    std::vector<SampleSet> out;
    out.reserve(rs.size());
    for (const auto& r : rs) out.push_back(sample_set_from_record(r));
    std::sort(out.begin(), out.end(),
              [](const SampleSet& a, const SampleSet& b) { return a.query_id < b.query_id; });
    return out;
}

struct CurvePoint {
    int k = 0;
    double value = 0;
    std::optional<double> stderr_;
};

struct CrossMatrix {
    long long both_correct = 0;
    long long a_only = 0;
    long long b_only = 0;
    long long both_wrong = 0;

    long long total() const { return both_correct + a_only + b_only + both_wrong; }
};

// ----------------------------------------------------------------------------
// Pass@k
// ----------------------------------------------------------------------------

inline BigInt binomial(long long n, long long k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt num = 1;
    BigInt den = 1;
    for (long long i = 0; i < k; ++i) {
        num *= (n - i);
        den *= (i + 1);
    }
    return num / den;
}

/// Unbiased estimator 1 - C(n-c, k)/C(n, k), evaluated as an exact rational
/// telescoping product so nothing overflows at n = 256.
inline double pass_at_k(long long n, long long c, long long k) {
    if (n < 1 || c < 0 || c > n || k < 1 || k > n)
        throw std::invalid_argument("pass_at_k: need 0 <= c <= n and 1 <= k <= n");
    if (c == 0) return 0.0;
    if (n - c < k) return 1.0;  // every k-subset must hit a correct sample
    Rational ratio = 1;
    for (long long i = 0; i < k; ++i) ratio *= Rational(n - c - i, n - i);
    return static_cast<double>(Rational(1) - ratio);
}

// ----------------------------------------------------------------------------
// Maj@k
// ----------------------------------------------------------------------------

struct MajOptions {
    enum class Mode { exhaustive, monte_carlo };
    Mode mode = Mode::exhaustive;       // exhaustive falls back to MC over the limit
    long long exhaustive_limit = 200000;
    long long trials = 20000;
    std::uint64_t seed = 0;
};

namespace metrics_detail {

/// Majority verdict of one subset, under the shared vote kernel.
inline bool subset_majority_correct(const SampleSet& s, const std::vector<int>& subset) {
    vote_detail::GroupBuilder builder;
    bool any = false;
    for (int idx : subset) {
        const SampleItem& it = s.items[static_cast<std::size_t>(idx)];
        if (!it.canonical_answer) continue;
        builder.add(*it.canonical_answer, it.completion_tokens, it.correct);
        any = true;
    }
    if (!any) return false;
    const auto groups = builder.take();
    const auto decision = vote_detail::decide(groups);
    return decision.winner && groups[*decision.winner].correct;
}

/// Advances a k-combination of 0..n-1 in lexicographic order.
inline bool next_combination(std::vector<int>& idx, int n) {
    const int k = static_cast<int>(idx.size());
    for (int i = k - 1; i >= 0; --i) {
        if (idx[static_cast<std::size_t>(i)] < n - k + i) {
            ++idx[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < k; ++j)
                idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace metrics_detail

/// Expected correctness of majority voting over a uniformly random size-k
/// subset of one query's pool. Exhaustive when C(n,k) fits the configured
/// limit, else seeded Monte Carlo with a binomial stderr.
inline CurvePoint maj_at_k(const SampleSet& samples, int k, const MajOptions& options = {}) {
    const int n = static_cast<int>(samples.items.size());
    if (n < 1 || k < 1 || k > n) throw std::invalid_argument("maj_at_k: need 1 <= k <= n");

    CurvePoint point;
    point.k = k;
    const BigInt total = binomial(n, k);
    const bool exhaustive =
        options.mode == MajOptions::Mode::exhaustive && total <= options.exhaustive_limit;

    if (exhaustive) {
        std::vector<int> idx(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
        long long wins = 0;
        long long count = 0;
        do {
            if (metrics_detail::subset_majority_correct(samples, idx)) ++wins;
            ++count;
        } while (metrics_detail::next_combination(idx, n));
        point.value = static_cast<double>(wins) / static_cast<double>(count);
        return point;
    }

    std::mt19937_64 rng(options.seed);
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<int> subset(static_cast<std::size_t>(k));
    long long wins = 0;
    for (long long t = 0; t < options.trials; ++t) {
        for (int i = 0; i < k; ++i) {
            const std::size_t j = static_cast<std::size_t>(i) +
                                  static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
            subset[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
        }
        if (metrics_detail::subset_majority_correct(samples, subset)) ++wins;
    }
    const double p = static_cast<double>(wins) / static_cast<double>(options.trials);
    point.value = p;
    point.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(options.trials));
    return point;
}

// ----------------------------------------------------------------------------
// Curves (averaged over queries, folded in sorted query-id order)
// ----------------------------------------------------------------------------

inline std::vector<CurvePoint> pass_curve(std::vector<SampleSet> samples,
                                          const std::vector<int>& ks) {
    if (samples.empty()) throw std::invalid_argument("pass_curve: no sample sets");
    std::sort(samples.begin(), samples.end(),
              [](const SampleSet& a, const SampleSet& b) { return a.query_id < b.query_id; });
    std::vector<CurvePoint> curve;
    curve.reserve(ks.size());
    for (int k : ks) {
        double sum = 0;
        for (const auto& s : samples)
            sum += pass_at_k(static_cast<long long>(s.items.size()), s.correct_count(), k);
        curve.push_back(CurvePoint{k, sum / static_cast<double>(samples.size()), std::nullopt});
    }
    return curve;
}

inline std::vector<CurvePoint> maj_curve(std::vector<SampleSet> samples, const std::vector<int>& ks,
                                         const MajOptions& options = {}) {
    if (samples.empty()) throw std::invalid_argument("maj_curve: no sample sets");
    std::sort(samples.begin(), samples.end(),
              [](const SampleSet& a, const SampleSet& b) { return a.query_id < b.query_id; });
    std::vector<CurvePoint> curve;
    curve.reserve(ks.size());
    for (int k : ks) {
        double sum = 0;
        double var_sum = 0;
        bool any_stderr = false;
        std::size_t qi = 0;
        for (const auto& s : samples) {
            MajOptions per = options;
            per.seed = mix_seed(options.seed, static_cast<std::uint64_t>(qi++) * 2654435761ULL +
                                                  static_cast<std::uint64_t>(k));
            const CurvePoint p = maj_at_k(s, k, per);
            sum += p.value;
            if (p.stderr_) {
                any_stderr = true;
                var_sum += *p.stderr_ * *p.stderr_;
            }
        }
        CurvePoint point;
        point.k = k;
        point.value = sum / static_cast<double>(samples.size());
        if (any_stderr) point.stderr_ = std::sqrt(var_sum) / static_cast<double>(samples.size());
        curve.push_back(point);
    }
    return curve;
}

// ----------------------------------------------------------------------------
// Diversity and length statistics
// ----------------------------------------------------------------------------

/// Mean distinct canonical answers per query. Answerless items share one
/// "unparsed" bucket per query.
inline double unique_answers(const std::vector<SampleSet>& samples) {
    if (samples.empty()) throw std::invalid_argument("unique_answers: no sample sets");
    double total = 0;
    for (const auto& s : samples) {
        std::set<std::string> distinct;
        bool unparsed = false;
        for (const auto& it : s.items) {
            if (it.canonical_answer) distinct.insert(*it.canonical_answer);
            else unparsed = true;
        }
        total += static_cast<double>(distinct.size()) + (unparsed ? 1.0 : 0.0);
    }
    return total / static_cast<double>(samples.size());
}

/// Mean completion tokens over correct items, pooled across queries.
/// Absent when nothing verified correct.
inline std::optional<double> avg_correct_tokens(const std::vector<SampleSet>& samples) {
    long long token_sum = 0;
    long long count = 0;
    for (const auto& s : samples) {
        for (const auto& it : s.items) {
            if (!it.correct) continue;
            token_sum += it.completion_tokens;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return static_cast<double>(token_sum) / static_cast<double>(count);
}

// ----------------------------------------------------------------------------
// Cross-run failure analysis
// ----------------------------------------------------------------------------

inline CrossMatrix cross_matrix(const std::map<std::string, bool>& a,
                                const std::map<std::string, bool>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cross_matrix: verdict maps cover different query sets");
    CrossMatrix m;
    for (const auto& [id, a_correct] : a) {
        const auto it = b.find(id);
        if (it == b.end())
            throw std::invalid_argument("cross_matrix: query \"" + id + "\" missing from b");
        const bool b_correct = it->second;
        if (a_correct && b_correct) ++m.both_correct;
        else if (a_correct) ++m.a_only;
        else if (b_correct) ++m.b_only;
        else ++m.both_wrong;
    }
    return m;
}

struct FrequencyBucket {
    int correct_paths = 0;
    long long queries = 0;
    double percent = 0;
};

struct FrequencyDistribution {
    std::vector<FrequencyBucket> buckets;  // correct_paths = 1..max_paths
    long long total = 0;                   // queries matching the filter
    long long zero_correct = 0;            // filtered queries outside every bucket
};

/// Histogram of queries by number of correct paths (1..max_paths), optionally
/// restricted to a set of query ids. Percentages are over the filtered total.
inline FrequencyDistribution correct_frequency_distribution(
    const std::vector<ExplorationRecord>& records, int max_paths = 4,
    const std::optional<std::set<std::string>>& filter = std::nullopt) {
    if (max_paths < 1) throw std::invalid_argument("correct_frequency_distribution: max_paths >= 1");
    FrequencyDistribution dist;
    dist.buckets.resize(static_cast<std::size_t>(max_paths));
    for (int i = 0; i < max_paths; ++i)
        dist.buckets[static_cast<std::size_t>(i)].correct_paths = i + 1;
    for (const auto& r : records) {
        if (filter && filter->count(r.query.id) == 0) continue;
        ++dist.total;
        int correct = 0;
        for (const auto& p : r.paths)
            if (p.correct.value_or(false)) ++correct;
        if (correct == 0) ++dist.zero_correct;
        else if (correct <= max_paths) ++dist.buckets[static_cast<std::size_t>(correct - 1)].queries;
    }
    for (auto& b : dist.buckets)
        b.percent = dist.total == 0
                        ? 0.0
                        : 100.0 * static_cast<double>(b.queries) / static_cast<double>(dist.total);
    return dist;
}

// ----------------------------------------------------------------------------
// Saturation diagnostics
// ----------------------------------------------------------------------------

/// Marginal new-answer rate: for each prefix position i, the fraction of
/// queries whose i-th sample introduces a canonical answer unseen in samples
/// 1..i-1. An empirical proxy for the vanishing marginal information gain of
/// i.i.d. sampling, not a mutual-information estimator.
inline std::vector<std::pair<int, double>> saturation_profile(const std::vector<SampleSet>& samples) {
    if (samples.empty()) throw std::invalid_argument("saturation_profile: no sample sets");
    std::size_t max_n = 0;
    for (const auto& s : samples) max_n = std::max(max_n, s.items.size());
    std::vector<std::pair<int, double>> profile;
    std::vector<long long> new_counts(max_n, 0);
    std::vector<long long> denominators(max_n, 0);
    for (const auto& s : samples) {
        std::set<std::string> seen;
        bool unparsed_seen = false;
        for (std::size_t i = 0; i < s.items.size(); ++i) {
            ++denominators[i];
            const auto& it = s.items[i];
            bool fresh = false;
            if (it.canonical_answer) {
                fresh = seen.insert(*it.canonical_answer).second;
            } else {
                fresh = !unparsed_seen;
                unparsed_seen = true;
            }
            if (fresh) ++new_counts[i];
        }
    }
    for (std::size_t i = 0; i < max_n; ++i) {
        if (denominators[i] == 0) break;
        profile.emplace_back(static_cast<int>(i) + 1,
                             static_cast<double>(new_counts[i]) /
                                 static_cast<double>(denominators[i]));
    }
    return profile;
}

}  // namespace ope

// Acceptance suite: property-based checks plus fixture-exact reproduction of
// the counting and statistics logic, all runnable against the scripted mock.
// Prints one PASS/FAIL line per criterion; exits nonzero on any failure.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ope/ope.hpp"

namespace {

using namespace ope;
namespace fs = std::filesystem;

struct AcceptanceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define ACCEPT(cond, msg)                                                    \
    do {                                                                     \
        if (!(cond)) throw AcceptanceFailure(std::string("line ") +          \
                                             std::to_string(__LINE__) +      \
                                             ": " + (msg));                  \
    } while (0)

// ----------------------------------------------------------------------------
// Shared helpers (oracle-side; independent of the implementation under test)
// ----------------------------------------------------------------------------

/// Pascal's-triangle binomials, exact.
BigInt pascal_binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::vector<BigInt> row(static_cast<std::size_t>(n) + 1, 0);
    row[0] = 1;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j >= 1; --j) row[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j - 1)];
    return row[static_cast<std::size_t>(k)];
}

struct TempRoot {
    fs::path dir;
    TempRoot() {
        dir = fs::temp_directory_path() /
              ("ope-acceptance-" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempRoot() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

TempRoot g_tmp;

fs::path write_text(const std::string& name, const std::string& content) {
    const fs::path path = g_tmp.dir / name;
    std::ofstream out(path, std::ios::trunc);
    out << content;
    return path;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ReasoningPath verified_path(const std::string& answer, bool correct, long long tokens) {
    ReasoningPath p;
    p.query_id = "q";
    p.mode = Mode::naive;
    p.completion_tokens = tokens;
    if (answer.empty()) {
        p.text = "no conclusion";
        p.correct = false;
    } else {
        p.text = "work ending in \\boxed{" + answer + "}";
        p.extracted_answer = answer;
        p.canonical_answer = answer;
        p.correct = correct;
    }
    return p;
}

// ----------------------------------------------------------------------------
// 1. Pass@k oracle equivalence
// ----------------------------------------------------------------------------

void criterion_pass_at_k() {
    std::mt19937_64 rng(1);
    for (int n = 1; n <= 12; ++n) {
        for (int c = 0; c <= n; ++c) {
            // random placement of the c correct samples
            std::vector<bool> layout(static_cast<std::size_t>(n), false);
            int placed = 0;
            while (placed < c) {
                const auto i = static_cast<std::size_t>(rng() % n);
                if (!layout[i]) {
                    layout[i] = true;
                    ++placed;
                }
            }
            for (int k = 1; k <= n; ++k) {
                long long hits = 0;
                long long total = 0;
                for (unsigned mask = 0; mask < (1u << n); ++mask) {
                    if (std::popcount(mask) != k) continue;
                    ++total;
                    for (int i = 0; i < n; ++i) {
                        if ((mask & (1u << i)) && layout[static_cast<std::size_t>(i)]) {
                            ++hits;
                            break;
                        }
                    }
                }
                const double oracle = static_cast<double>(Rational(hits, total));
                const double impl = pass_at_k(n, c, k);
                ACCEPT(impl == oracle, "pass_at_k(" + std::to_string(n) + "," + std::to_string(c) +
                                           "," + std::to_string(k) + ") = " + std::to_string(impl) +
                                           " != oracle " + std::to_string(oracle));
            }
        }
    }
}

// ----------------------------------------------------------------------------
// 2. Maj@k oracle equivalence
// ----------------------------------------------------------------------------

bool oracle_subset_majority(const SampleSet& s, unsigned mask) {
    std::map<std::string, std::pair<long long, long long>> votes;  // count, token sum
    std::map<std::string, bool> verdicts;
    const int n = static_cast<int>(s.items.size());
    for (int i = 0; i < n; ++i) {
        if (!(mask & (1u << i))) continue;
        const auto& item = s.items[static_cast<std::size_t>(i)];
        if (!item.canonical_answer) continue;
        auto& [count, tokens] = votes[*item.canonical_answer];
        ++count;
        tokens += item.completion_tokens;
        verdicts[*item.canonical_answer] = item.correct;
    }
    if (votes.empty()) return false;
    std::string winner;
    for (const auto& [answer, stat] : votes) {
        if (winner.empty()) {
            winner = answer;
            continue;
        }
        const auto& best = votes[winner];
        const double lhs = static_cast<double>(stat.second) * static_cast<double>(best.first);
        const double rhs = static_cast<double>(best.second) * static_cast<double>(stat.first);
        if (stat.first > best.first || (stat.first == best.first && lhs > rhs) ||
            (stat.first == best.first && lhs == rhs && answer < winner))
            winner = answer;
    }
    return verdicts[winner];
}

void criterion_maj_at_k() {
    std::mt19937_64 rng(2);
    const std::vector<std::string> pool = {"a", "b", "c", ""};
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 10);
        const std::string truth = pool[rng() % 3];
        SampleSet s;
        s.query_id = "q";
        for (int i = 0; i < n; ++i) {
            SampleItem item;
            const std::string answer = pool[rng() % pool.size()];
            if (!answer.empty()) item.canonical_answer = answer;
            item.correct = !answer.empty() && answer == truth;
            item.completion_tokens = static_cast<long long>(rng() % 40);
            s.items.push_back(item);
        }
        const int k = 1 + static_cast<int>(rng() % n);
        long long wins = 0;
        long long total = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (std::popcount(mask) != k) continue;
            ++total;
            if (oracle_subset_majority(s, mask)) ++wins;
        }
        const double oracle = static_cast<double>(wins) / static_cast<double>(total);
        const double impl = maj_at_k(s, k).value;
        ACCEPT(impl == oracle, "maj_at_k trial " + std::to_string(trial) + ": impl " +
                                   std::to_string(impl) + " != oracle " + std::to_string(oracle));

        if (trial % 25 == 0) {
            MajOptions mc;
            mc.mode = MajOptions::Mode::monte_carlo;
            mc.trials = 20000;
            mc.seed = rng();
            const auto estimate = maj_at_k(s, k, mc);
            ACCEPT(estimate.stderr_.has_value(), "monte carlo must report a stderr");
            ACCEPT(std::abs(estimate.value - oracle) <= 3.0 * *estimate.stderr_ + 1e-9,
                   "monte carlo off by more than 3 stderr (trial " + std::to_string(trial) + ")");
        }
    }
}

// ----------------------------------------------------------------------------
// 3. Saturation reproduction
// ----------------------------------------------------------------------------

void criterion_saturation() {
    // seeded mock: correct answer "7" at 0.2 vs wrong "3" at 0.8, n = 64
    MockRule rule;
    rule.contains = "";
    rule.answers = {{"7", 0.2}, {"3", 0.8}};
    MockBackend mock({rule}, 2024);
    ChatRequest req;
    req.model = "m";
    req.messages = {{"user", "saturation probe"}};
    req.n = 64;
    const auto resp = mock.complete(req);

    SampleSet s;
    s.query_id = "q";
    for (const auto& completion : resp.completions) {
        ReasoningPath p = path_from_completion(completion, "q", Mode::naive, std::nullopt);
        p = verify_path(std::move(p), "7");
        SampleItem item;
        item.canonical_answer = p.canonical_answer;
        item.correct = p.correct.value_or(false);
        item.completion_tokens = p.completion_tokens;
        s.items.push_back(item);
    }
    const int n = 64;
    const long long c = s.correct_count();
    ACCEPT(c >= 1 && c < 32, "drawn correct count out of expected range: " + std::to_string(c));
    const long long w = n - c;

    // ks where C(64, k) fits the exhaustive limit
    std::vector<int> ks;
    for (int k = 1; k <= n; ++k)
        if (pascal_binom(n, k) <= 200000) ks.push_back(k);
    ACCEPT(ks.size() >= 6, "expected several exhaustive ks");

    const auto pass = pass_curve({s}, ks);
    const auto maj = maj_curve({s}, ks);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const int k = ks[i];
        // closed forms over the realized counts, in exact rationals
        const Rational pass_closed =
            Rational(1) - Rational(pascal_binom(static_cast<int>(w), k), pascal_binom(n, k));
        Rational maj_closed = 0;
        for (long long j = std::max<long long>(0, k - w); j <= std::min<long long>(c, k); ++j) {
            if (j > k - j) {  // ties lose: equal tokens, then "3" < "7" lexicographically
                maj_closed += Rational(pascal_binom(static_cast<int>(c), static_cast<int>(j)) *
                                           pascal_binom(static_cast<int>(w), static_cast<int>(k - j)),
                                       pascal_binom(n, k));
            }
        }
        ACCEPT(std::abs(pass[i].value - static_cast<double>(pass_closed)) < 1e-9,
               "pass@" + std::to_string(k) + " deviates from closed form");
        ACCEPT(std::abs(maj[i].value - static_cast<double>(maj_closed)) < 1e-9,
               "maj@" + std::to_string(k) + " deviates from closed form");
    }

    const double pass64 = pass_at_k(n, c, 64);
    const double maj64 = maj_at_k(s, 64).value;
    ACCEPT(pass64 > 0.999, "pass@64 = " + std::to_string(pass64) + " (expected > 0.999)");
    ACCEPT(maj64 < 0.01, "maj@64 = " + std::to_string(maj64) + " (expected < 0.01)");
}

// ----------------------------------------------------------------------------
// 4. GRPO advantages
// ----------------------------------------------------------------------------

void criterion_grpo() {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t g = 2 + rng() % 15;  // G in [2, 16]
        std::vector<double> rewards(g);
        for (auto& r : rewards) r = static_cast<double>(rng() % 9) / 8.0;
        const auto a = grpo_advantages(rewards);
        double mean = 0;
        for (double v : a) mean += v;
        mean /= static_cast<double>(g);
        ACCEPT(std::abs(mean) < 1e-12, "advantage mean drifted: " + std::to_string(mean));
        bool degenerate = true;
        for (double r : rewards) degenerate &= r == rewards[0];
        if (degenerate) {
            for (double v : a) ACCEPT(v == 0.0, "degenerate group must be all zeros");
        } else {
            double var = 0;
            for (double v : a) var += v * v;
            var /= static_cast<double>(g);
            ACCEPT(std::abs(std::sqrt(var) - 1.0) < 1e-9,
                   "advantage std drifted: " + std::to_string(std::sqrt(var)));
        }
    }
    const auto zeros = grpo_advantages({0.25, 0.25, 0.25, 0.25});
    for (double v : zeros) ACCEPT(v == 0.0, "all-equal rewards must standardize to zero");
    const auto skew = grpo_advantages({1, 0, 0, 0});
    ACCEPT(std::abs(skew[0] - 1.7321) < 1e-4, "skew[0]");
    for (int i = 1; i < 4; ++i)
        ACCEPT(std::abs(skew[static_cast<std::size_t>(i)] + 0.5774) < 1e-4, "skew[i]");
}

// ----------------------------------------------------------------------------
// 5. Reward identities
// ----------------------------------------------------------------------------

void criterion_rewards() {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 8);
        const int k = 1 + static_cast<int>(rng() % 8);
        std::vector<std::vector<bool>> m(static_cast<std::size_t>(n));
        for (auto& row : m) {
            row.resize(static_cast<std::size_t>(k));
            for (int j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = rng() % 2 == 0;
        }
        // exact rational mean of the per-outline rewards
        Rational mean = 0;
        for (const auto& row : m) {
            long long correct = 0;
            for (bool v : row)
                if (v) ++correct;
            const double outline = reward_plan_outline(row);
            ACCEPT(outline == static_cast<double>(Rational(correct, k)), "outline reward mismatch");
            mean += Rational(correct, k);
        }
        mean /= n;
        ACCEPT(reward_plan_set(m) == static_cast<double>(mean),
               "set reward != mean of outline rewards at trial " + std::to_string(trial));
    }
    const std::vector<std::vector<bool>> fixture = {{true, true, false, false},
                                                    {true, false, false, true},
                                                    {false, true, true, false},
                                                    {false, false, false, false}};
    ACCEPT(reward_plan_set(fixture) == 0.375, "4x4 with 6 true must be exactly 0.375");
}

// ----------------------------------------------------------------------------
// 6. Aggregation dominance
// ----------------------------------------------------------------------------

void criterion_dominance() {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::string truth = std::to_string(rng() % 4);
        const std::size_t n = 1 + rng() % 6;
        std::vector<ReasoningPath> paths;
        for (std::size_t i = 0; i < n; ++i) {
            if (rng() % 5 == 0) {
                paths.push_back(verified_path("", false, static_cast<long long>(rng() % 200)));
            } else {
                const std::string answer = std::to_string(rng() % 4);
                paths.push_back(verified_path(answer, answer == truth,
                                              static_cast<long long>(rng() % 200)));
            }
        }
        const bool bon = aggregate_bon(paths).correct;
        const bool random_pick = aggregate_random(paths, rng()).correct;
        const bool sc = aggregate_self_consistency(paths).correct;
        ACCEPT(bon >= random_pick, "BoN must dominate random at trial " + std::to_string(trial));
        ACCEPT(bon >= sc, "BoN must dominate self-consistency at trial " + std::to_string(trial));
    }
    // permutation invariance over 1000 shuffles
    for (int fixture = 0; fixture < 100; ++fixture) {
        const std::string truth = std::to_string(rng() % 3);
        std::vector<ReasoningPath> paths;
        const std::size_t n = 2 + rng() % 5;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string answer = std::to_string(rng() % 3);
            paths.push_back(verified_path(answer, answer == truth,
                                          static_cast<long long>(rng() % 100)));
        }
        const auto reference = aggregate_self_consistency(paths);
        for (int shuffle = 0; shuffle < 10; ++shuffle) {
            std::shuffle(paths.begin(), paths.end(), rng);
            const auto shuffled = aggregate_self_consistency(paths);
            ACCEPT(shuffled.chosen_answer == reference.chosen_answer,
                   "self-consistency changed under permutation");
            ACCEPT(shuffled.correct == reference.correct,
                   "self-consistency verdict changed under permutation");
        }
    }
}

// ----------------------------------------------------------------------------
// 7. Cross-matrix and frequency-distribution counting
// ----------------------------------------------------------------------------

void criterion_counting() {
    // verdict fixture: 1595 both, 232 a-only, 402 b-only, 2551 neither
    std::map<std::string, bool> a;
    std::map<std::string, bool> b;
    int id = 0;
    auto add = [&](int count, bool av, bool bv) {
        for (int i = 0; i < count; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "q%05d", id++);
            a[buf] = av;
            b[buf] = bv;
        }
    };
    add(1595, true, true);
    add(232, true, false);
    add(402, false, true);
    add(2551, false, false);
    const auto m = cross_matrix(a, b);
    ACCEPT(m.both_correct == 1595 && m.a_only == 232 && m.b_only == 402 && m.both_wrong == 2551,
           "cross matrix cells mismatch");
    ACCEPT(m.total() == 4780, "cross matrix total mismatch");

    // a-only cell: 167/38/17/10 queries with 1/2/3/4 correct paths out of 4
    std::vector<ExplorationRecord> records;
    std::set<std::string> a_only_ids;
    int qid = 0;
    auto add_records = [&](int count, int correct) {
        for (int i = 0; i < count; ++i) {
            ExplorationRecord r;
            r.query.id = "a" + std::to_string(qid++);
            r.query.problem = "p";
            r.query.ground_truth = "1";
            r.mode = Mode::naive;
            r.sampling.n_samples = 4;
            for (int pth = 0; pth < 4; ++pth)
                r.paths.push_back(verified_path(pth < correct ? "1" : "2", pth < correct, 10));
            for (auto& p : r.paths) p.query_id = r.query.id;
            a_only_ids.insert(r.query.id);
            records.push_back(std::move(r));
        }
    };
    add_records(167, 1);
    add_records(38, 2);
    add_records(17, 3);
    add_records(10, 4);
    const auto dist = correct_frequency_distribution(records, 4, a_only_ids);
    ACCEPT(dist.total == 232, "a-only total mismatch");
    ACCEPT(dist.buckets[0].queries == 167, "bucket 1 count mismatch");
    ACCEPT(dist.buckets[1].queries == 38 && dist.buckets[2].queries == 17 &&
               dist.buckets[3].queries == 10,
           "bucket counts mismatch");
    ACCEPT(std::abs(dist.buckets[0].percent - 71.98) <= 0.01,
           "bucket 1 percent " + std::to_string(dist.buckets[0].percent));

    // b-only cell shape: 243/93/40/26 out of 402
    records.clear();
    std::set<std::string> b_only_ids;
    qid = 0;
    auto add_b = [&](int count, int correct) {
        for (int i = 0; i < count; ++i) {
            ExplorationRecord r;
            r.query.id = "b" + std::to_string(qid++);
            r.query.problem = "p";
            r.query.ground_truth = "1";
            r.mode = Mode::naive;
            r.sampling.n_samples = 4;
            for (int pth = 0; pth < 4; ++pth)
                r.paths.push_back(verified_path(pth < correct ? "1" : "2", pth < correct, 10));
            for (auto& p : r.paths) p.query_id = r.query.id;
            b_only_ids.insert(r.query.id);
            records.push_back(std::move(r));
        }
    };
    add_b(243, 1);
    add_b(93, 2);
    add_b(40, 3);
    add_b(26, 4);
    const auto bdist = correct_frequency_distribution(records, 4, b_only_ids);
    ACCEPT(bdist.total == 402 && bdist.buckets[0].queries == 243, "b-only cell mismatch");
    ACCEPT(std::abs(bdist.buckets[0].percent - 60.45) <= 0.01, "b-only percent mismatch");
}

// ----------------------------------------------------------------------------
// 8. Verifier
// ----------------------------------------------------------------------------

void criterion_verifier() {
    const std::vector<std::pair<std::string, std::string>> paths = {
        {"Both 1 and 81 qualify.\n$$\n1 + 81 = 82\n$$\n\n$$\n\\boxed{82}\n$$", "82"},
        {"Thus final answer: $\\boxed{106}$. The final answer in this path:\n$$\n\\boxed{106}\n$$",
         "106"},
        {"Thus sum = 22.\nWe should output $\\boxed{22}$. The final answer in this path:\n$$\n"
         "\\boxed{22}\n$$",
         "22"},
        {"$$\n1+21+81=103.\n$$\n\n$$\n\\boxed{103}\n$$", "103"},
    };
    for (const auto& [text, expected] : paths) {
        const auto got = extract_boxed(text);
        ACCEPT(got.has_value() && *got == expected,
               "extract_boxed expected " + expected + ", got " + got.value_or("<none>"));
    }

    // 200-case numeric-equivalence table from an exact-rational oracle
    std::mt19937_64 rng(8);
    const std::vector<long long> dens = {1, 2, 4, 5, 8, 10, 20, 25, 100};
    auto render = [&](long long num, long long den) -> std::string {
        std::vector<std::string> forms;
        forms.push_back(std::to_string(num) + "/" + std::to_string(den));
        forms.push_back("\\frac{" + std::to_string(num) + "}{" + std::to_string(den) + "}");
        if (den == 1) forms.push_back(std::to_string(num));
        if (100 % den == 0) {
            const long long scaled = num * (100 / den);
            std::string digits = std::to_string(std::abs(scaled));
            while (digits.size() < 3) digits = "0" + digits;
            std::string decimal = (scaled < 0 ? "-" : "") +
                                  digits.substr(0, digits.size() - 2) + "." +
                                  digits.substr(digits.size() - 2);
            forms.push_back(decimal);
            forms.push_back(std::to_string(scaled) + "%");
        }
        std::string form = forms[rng() % forms.size()];
        if (rng() % 3 == 0) form = "$" + form + "$";
        if (rng() % 4 == 0) form = " " + form + " ";
        return form;
    };
    int equal_cases = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const long long na = static_cast<long long>(rng() % 41) - 20;
        const long long da = dens[rng() % dens.size()];
        long long nb;
        long long db = dens[rng() % dens.size()];
        if (rng() % 2 == 0) {
            // same value, possibly different surface form and scaling
            const long long scale = 1 + static_cast<long long>(rng() % 3);
            nb = na * scale;
            db = da * scale;
        } else {
            nb = static_cast<long long>(rng() % 41) - 20;
        }
        const bool expected = Rational(na, da) == Rational(nb, db);
        if (expected) ++equal_cases;
        const auto ca = canonicalize(render(na, da));
        const auto cb = canonicalize(render(nb, db));
        ACCEPT(ca.numeric() && cb.numeric(), "rendered numeric failed to parse at trial " +
                                                 std::to_string(trial));
        ACCEPT(answers_equal(ca, cb) == expected,
               "equivalence mismatch at trial " + std::to_string(trial));
    }
    ACCEPT(equal_cases >= 50, "table should contain a healthy share of equal pairs");

    // 10,000-case fuzz: no crash on adversarial input
    const std::string alphabet = "\\boxed{}{}$%/.,-0123456789abfrac ";
    for (int trial = 0; trial < 10000; ++trial) {
        std::string s;
        const std::size_t len = rng() % 512;
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        if (const auto boxed = extract_boxed(s)) (void)canonicalize(*boxed);
    }
    std::string big(1 << 20, '{');
    for (std::size_t i = 0; i < big.size(); i += 97) big.replace(i, 1, "\\");
    big += "\\boxed{7}";
    ACCEPT(extract_boxed(big) == "7", "1MB adversarial input must still extract");
}

// ----------------------------------------------------------------------------
// 9. End-to-end mock pipeline
// ----------------------------------------------------------------------------

void collect_files(const fs::path& root, std::map<std::string, std::string>& out) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        out[fs::relative(entry.path(), root).string()] = read_bytes(entry.path());
    }
}

void criterion_end_to_end() {
    const auto started = std::chrono::steady_clock::now();
    ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);

    std::string queries;
    for (int i = 0; i < 20; ++i) {
        queries += ojson{{"id", "q" + std::to_string(i)},
                         {"problem", "Evaluate configuration " + std::to_string(i) + "."},
                         {"answer", "7"}}
                       .dump() +
                   "\n";
    }
    const auto queries_path = write_text("e2e-queries.jsonl", queries);

    std::string planning = "Short analysis of the setup.";
    for (int i = 1; i <= 4; ++i)
        planning += "\n<outline_" + std::to_string(i) + ">Angle " + std::to_string(i) +
                    "</outline_" + std::to_string(i) + ">";
    ojson rules = ojson::array();
    rules.push_back(
        ojson{{"contains", "<outline_i>"}, {"responses", ojson::array({planning})}});
    rules.push_back(ojson{{"contains", "Thinker"},
                          {"responses", ojson::array({"reviewing all thinkers: \\boxed{7}"})}});
    rules.push_back(ojson{{"contains", ""}, {"answers", ojson{{"7", 0.5}, {"3", 0.5}}}});
    const auto script_path = write_text("e2e-script.json", ojson{{"rules", rules}}.dump(2));

    auto run_pipeline = [&](const std::string& name) {
        RunConfig config;
        config.mode = Mode::ope;
        config.n = 4;
        config.queries_path = queries_path.string();
        config.mock_script = script_path.string();
        config.out_dir = (g_tmp.dir / name).string();
        config.backend.model = "mock-model";
        config.backend.retry.base_delay = std::chrono::milliseconds(0);
        config.seed = 1234;
        config.strategies = {"random", "self-consistency", "best-of-n", "lrm-summary"};
        config.ks = {1, 2, 4};
        config.schedule = {1, 2, 2};

        const auto explore = cmd_explore(config);
        ACCEPT(explore.failures.empty(), "explore reported failures");
        ACCEPT(explore.records == 20, "expected 20 records, got " +
                                          std::to_string(explore.records));
        ACCEPT(explore.paths == 80, "expected 80 paths, got " + std::to_string(explore.paths));
        const auto aggregate = cmd_aggregate(config);
        ACCEPT(aggregate.failures.empty(), "aggregate reported failures");
        const auto metrics = cmd_metrics(config);
        ACCEPT(metrics.failures.empty(), "metrics reported failures");
        RunConfig rl_config = config;
        rl_config.out_dir = (g_tmp.dir / (name + "-rl")).string();
        const auto rlgen = cmd_rlgen(rl_config);
        ACCEPT(rlgen.failures.empty(), "rlgen reported failures");
        return std::make_pair(config.out_dir, rl_config.out_dir);
    };

    const auto [run_a, rl_a] = run_pipeline("e2e-a");
    const auto [run_b, rl_b] = run_pipeline("e2e-b");

    for (const auto& [a_dir, b_dir] :
         std::vector<std::pair<std::string, std::string>>{{run_a, run_b}, {rl_a, rl_b}}) {
        std::map<std::string, std::string> a_files;
        std::map<std::string, std::string> b_files;
        collect_files(a_dir, a_files);
        collect_files(b_dir, b_files);
        ACCEPT(!a_files.empty(), "first run produced no files");
        ACCEPT(a_files.size() == b_files.size(), "run file sets differ in size");
        for (const auto& [rel, bytes] : a_files) {
            const auto it = b_files.find(rel);
            ACCEPT(it != b_files.end(), "missing file in rerun: " + rel);
            ACCEPT(it->second == bytes, "byte mismatch in " + rel);
        }
    }

    // schedule arithmetic at the reference configuration
    PhaseSchedule s;
    int steps = 0;
    while (!s.terminal()) {
        auto [next, ev] = advance_schedule(s);
        s = next;
        if (ev.kind != ScheduleEvent::Kind::transition) ++steps;
    }
    ACCEPT(steps == 270, "reference schedule must emit 270 training steps");

    const auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
        std::chrono::steady_clock::now() - started);
    ACCEPT(elapsed.count() < 60, "pipeline exceeded 60 seconds");
}

// ----------------------------------------------------------------------------
// 10. Backend contract
// ----------------------------------------------------------------------------

void criterion_backend_contract() {
    for (const int batch : {1, 8, 64}) {
        MockRule rule;
        rule.contains = "";
        rule.responses = {"ok"};
        rule.delay_ms = batch == 64 ? 5 : 15;
        MockBackend mock({rule}, 0);
        std::vector<ChatRequest> requests;
        for (int i = 0; i < batch; ++i) {
            ChatRequest r;
            r.model = "m";
            r.messages = {{"user", "p" + std::to_string(i)}};
            requests.push_back(r);
        }
        const auto results = sample_paths(mock, requests, 8);
        for (const auto& item : results) ACCEPT(item.ok(), "batch item failed");
        ACCEPT(mock.max_in_flight() <= 8,
               "high-water " + std::to_string(mock.max_in_flight()) + " exceeded concurrency 8");
        if (batch >= 8) ACCEPT(mock.max_in_flight() >= 2, "no concurrency observed");
    }

    // retry/backoff policy on scripted failure sequences
    RetryPolicy policy;
    policy.max_attempts = 4;
    policy.base_delay = std::chrono::milliseconds(500);
    policy.jitter = false;

    auto scripted = [](int fail_times, int status) {
        MockRule rule;
        rule.contains = "";
        rule.fail_times = fail_times;
        rule.fail_status = status;
        rule.responses = {"recovered"};
        return std::make_shared<MockBackend>(std::vector<MockRule>{rule}, 0);
    };
    ChatRequest req;
    req.model = "m";
    req.messages = {{"user", "x"}};

    std::vector<std::chrono::milliseconds> slept;
    auto record_sleep = [&](std::chrono::milliseconds d) { slept.push_back(d); };

    auto recovering = scripted(2, 503);
    RetryingBackend retry_ok(recovering, policy, record_sleep);
    ACCEPT(retry_ok.complete(req).completions[0].content == "recovered",
           "expected recovery after transient failures");
    ACCEPT(recovering->total_requests() == 3, "expected exactly 3 attempts");
    ACCEPT(slept.size() == 2, "expected 2 backoff sleeps");
    ACCEPT(slept[0] == std::chrono::milliseconds(500) && slept[1] == std::chrono::milliseconds(1000),
           "backoff must double from the base delay");

    auto hopeless = scripted(5, 503);
    RetryingBackend retry_fail(hopeless, policy, record_sleep);
    bool threw = false;
    try {
        retry_fail.complete(req);
    } catch (const BackendError& e) {
        threw = true;
        ACCEPT(e.status == 503 && e.transient, "terminal error must carry the last status");
    }
    ACCEPT(threw, "exhausted retries must raise");
    ACCEPT(hopeless->total_requests() == 4, "retry count must not exceed max_attempts");

    auto fatal = scripted(1, 400);
    RetryingBackend retry_fatal(fatal, policy, record_sleep);
    threw = false;
    try {
        retry_fatal.complete(req);
    } catch (const BackendError& e) {
        threw = true;
        ACCEPT(!e.transient, "4xx other than 429 must be non-transient");
    }
    ACCEPT(threw && fatal->total_requests() == 1, "non-transient failures must fail fast");

    // pre-jitter delays are nondecreasing; jitter stays in [0.5, 1.0) of them
    std::chrono::milliseconds previous{0};
    for (int i = 0; i < 10; ++i) {
        const auto d = backoff_delay(policy, i);
        ACCEPT(d >= previous, "pre-jitter backoff must be nondecreasing");
        previous = d;
    }
    RetryPolicy jittered = policy;
    jittered.jitter = true;
    for (std::uint64_t bits = 0; bits < 128; ++bits) {
        const auto d = backoff_delay(jittered, 3, bits);
        ACCEPT(d >= std::chrono::milliseconds(2000) && d <= std::chrono::milliseconds(4000),
               "jittered delay outside [0.5, 1.0] of the pre-jitter value");
    }
}

struct Criterion {
    int id;
    const char* name;
    std::function<void()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "pass@k estimator equals exhaustive subset enumeration (n <= 12, exact)",
         criterion_pass_at_k},
        {2, "maj@k equals direct enumeration; Monte Carlo within 3 stderr", criterion_maj_at_k},
        {3, "saturation: pass@k rises while maj@k collapses, matching closed form",
         criterion_saturation},
        {4, "GRPO advantages: zero mean, unit population std, degenerate rule", criterion_grpo},
        {5, "set reward identity with per-outline rewards (exact)", criterion_rewards},
        {6, "best-of-n dominance and self-consistency permutation invariance",
         criterion_dominance},
        {7, "cross-matrix (1595, 232, 402, 2551) and 167/232 = 71.98% bucket",
         criterion_counting},
        {8, "verifier: boxed extraction fixtures, 200-case equivalence table, fuzz",
         criterion_verifier},
        {9, "end-to-end mock pipeline: counts, determinism, < 60 s", criterion_end_to_end},
        {10, "backend contract: bounded concurrency and retry/backoff policy",
         criterion_backend_contract},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto started = std::chrono::steady_clock::now();
        std::string error;
        try {
            criterion.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
        if (error.empty()) {
            std::printf("PASS [%2d] %s (%lldms)\n", criterion.id, criterion.name,
                        static_cast<long long>(ms));
        } else {
            ++failures;
            std::printf("FAIL [%2d] %s (%lldms)\n          %s\n", criterion.id, criterion.name,
                        static_cast<long long>(ms), error.c_str());
        }
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}

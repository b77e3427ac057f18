#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ope/verifier.hpp"

using namespace ope;

namespace {

// Four path fixtures shaped like real generations: distinct final answers,
// path 2 repeating its boxed value.
const std::string kPathBoxed82 =
    "We work from the prime factorization and collect the qualifying divisors.\n"
    "Both 1 and 81 qualify.\n$$\n1 + 81 = 82\n$$\n\n$$\n\\boxed{82}\n$$\n";
const std::string kPathBoxed106 =
    "Filtering residues modulo 10 leaves three candidates summing to 106.\n"
    "Thus final answer: $\\boxed{106}$. The final answer in this path:\n$$\n\\boxed{106}\n$$\n";
const std::string kPathBoxed22 =
    "Pairing divisors leaves only 1 and 21.\nThus sum = 22.\n"
    "We should output $\\boxed{22}$. The final answer in this path:\n$$\n\\boxed{22}\n$$\n";
const std::string kPathBoxed103 =
    "Counting exponent combinations gives the divisors 1, 21, 81.\n$$\n1+21+81=103.\n$$\n\n"
    "$$\n\\boxed{103}\n$$\n";

CanonicalAnswer rat(long long num, long long den) {
    CanonicalAnswer a;
    a.kind = CanonicalAnswer::Kind::rational;
    a.value = Rational(num, den);
    return a;
}

}  // namespace

TEST_CASE("extract_boxed finds the last well-formed occurrence") {
    CHECK(extract_boxed(kPathBoxed82) == "82");
    CHECK(extract_boxed(kPathBoxed106) == "106");  // repeated: last occurrence wins
    CHECK(extract_boxed(kPathBoxed22) == "22");
    CHECK(extract_boxed(kPathBoxed103) == "103");
    CHECK(extract_boxed("\\boxed{\\frac{1}{2}}") == "\\frac{1}{2}");
    CHECK_FALSE(extract_boxed("no box here").has_value());
}

TEST_CASE("extract_boxed skips unbalanced occurrences in favor of earlier ones") {
    CHECK(extract_boxed("\\boxed{42} then \\boxed{broken") == "42");
    CHECK_FALSE(extract_boxed("\\boxed{never closes").has_value());
    CHECK(extract_boxed("\\boxed{a{b}c}") == "a{b}c");
    CHECK(extract_boxed("\\boxed{}") == "");
}

TEST_CASE("extract_boxed survives adversarial input") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "\\boxed{}{}()[]0123456789 ab";
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        const std::size_t len = rng() % 2000;
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        (void)extract_boxed(s);  // must not throw or crash
    }
}

TEST_CASE("canonicalize parses fractions against a brute-force table") {
    // independent table: surface form -> exact numerator/denominator
    const std::vector<std::tuple<std::string, long long, long long>> table = {
        {"\\frac{1}{2}", 1, 2},     {"\\frac{2}{4}", 1, 2},    {"\\frac{-3}{9}", -1, 3},
        {"-\\frac{3}{9}", -1, 3},   {"\\dfrac{10}{5}", 2, 1},  {"3/4", 3, 4},
        {"-6/8", -3, 4},            {"12/4", 3, 1},            {"\\frac{0}{7}", 0, 1},
        {"100/10", 10, 1},          {"\\frac{7}{-2}", -7, 2},
    };
    for (const auto& [text, num, den] : table) {
        const CanonicalAnswer a = canonicalize(text);
        INFO(text);
        REQUIRE(a.numeric());
        CHECK(a.value == Rational(num, den));
    }
}

TEST_CASE("canonicalize handles integers, decimals, percentages, separators") {
    CHECK(canonicalize("  82 ").kind == CanonicalAnswer::Kind::integer);
    CHECK(canonicalize("  82 ").value == 82);
    CHECK(canonicalize("-17").value == -17);
    CHECK(canonicalize("82.0").kind == CanonicalAnswer::Kind::decimal);
    CHECK(canonicalize("82.0").value == 82);
    CHECK(canonicalize("0.5").value == Rational(1, 2));
    CHECK(canonicalize(".25").value == Rational(1, 4));
    CHECK(canonicalize("50%").value == Rational(1, 2));
    CHECK(canonicalize("12.5\\%").value == Rational(1, 8));
    CHECK(canonicalize("1,000").value == 1000);
    CHECK(canonicalize("1,234.5").value == Rational(12345, 10));
    CHECK(canonicalize("$82$").value == 82);
    CHECK(canonicalize("{82}").value == 82);
    CHECK(canonicalize("\\left( 82 \\right)").kind == CanonicalAnswer::Kind::symbolic_text);
    CHECK(canonicalize("\\text{82}").value == 82);
}

TEST_CASE("canonicalize falls back to normalized symbolic text") {
    const CanonicalAnswer a = canonicalize("x+1");
    CHECK(a.kind == CanonicalAnswer::Kind::symbolic_text);
    CHECK(a.text == "x+1");
    CHECK(canonicalize("  x  +  1 ").text == "x + 1");
    CHECK(canonicalize("{1,2}").text == "1,2");   // not a thousands separator
    CHECK(canonicalize("12,34").kind == CanonicalAnswer::Kind::symbolic_text);
    CHECK(canonicalize("1/0").kind == CanonicalAnswer::Kind::symbolic_text);
    CHECK(canonicalize("").kind == CanonicalAnswer::Kind::symbolic_text);
    CHECK(canonicalize("").text.empty());
    CHECK(canonicalize("\\frac{x}{2}").kind == CanonicalAnswer::Kind::symbolic_text);
}

TEST_CASE("canonical serialization is reduced with positive denominator") {
    CHECK(canonicalize("\\frac{2}{4}").str() == "1/2");
    CHECK(canonicalize("\\frac{7}{-2}").str() == "-7/2");
    CHECK(canonicalize("4/2").str() == "2");
    CHECK(canonicalize("2.50").str() == "5/2");
    CHECK(canonicalize("82").str() == "82");
}

TEST_CASE("answers_equal compares numerics exactly across kinds") {
    CHECK(answers_equal(canonicalize("82"), canonicalize("82.0")));
    CHECK(answers_equal(canonicalize("\\frac{1}{2}"), canonicalize("0.5")));
    CHECK(answers_equal(canonicalize("1"), canonicalize("2/2")));
    CHECK_FALSE(answers_equal(canonicalize("21"), canonicalize("22")));
    CHECK_FALSE(answers_equal(canonicalize("82"), canonicalize("x+1")));
    CHECK(answers_equal(canonicalize("x + 1"), canonicalize("x  +  1")));
}

TEST_CASE("answers_equal is an equivalence relation on randomized numerics") {
    std::mt19937_64 rng(2024);
    std::vector<CanonicalAnswer> pool;
    for (int i = 0; i < 60; ++i) {
        const long long num = static_cast<long long>(rng() % 19) - 9;
        const long long den = 1 + static_cast<long long>(rng() % 6);
        pool.push_back(rat(num, den));
    }
    for (const auto& a : pool) CHECK(answers_equal(a, a));  // reflexive
    for (int trial = 0; trial < 2000; ++trial) {
        const auto& a = pool[rng() % pool.size()];
        const auto& b = pool[rng() % pool.size()];
        const auto& c = pool[rng() % pool.size()];
        CHECK(answers_equal(a, b) == answers_equal(b, a));  // symmetric
        if (answers_equal(a, b) && answers_equal(b, c)) CHECK(answers_equal(a, c));  // transitive
    }
}

TEST_CASE("verify_path runs the full pipeline") {
    ReasoningPath p;
    p.query_id = "q";
    p.mode = Mode::naive;

    p.text = kPathBoxed82;
    auto verified = verify_path(p, "103");
    CHECK(verified.extracted_answer == "82");
    CHECK(verified.canonical_answer == "82");
    CHECK(verified.correct == false);

    p.text = kPathBoxed103;
    verified = verify_path(p, "103");
    CHECK(verified.correct == true);

    p.text = "no final answer anywhere";
    verified = verify_path(p, "103");
    CHECK_FALSE(verified.extracted_answer.has_value());
    CHECK(verified.correct == false);
}

TEST_CASE("verify_path is idempotent") {
    ReasoningPath p;
    p.query_id = "q";
    p.mode = Mode::naive;
    p.text = kPathBoxed106;
    const auto once = verify_path(p, "106");
    const auto twice = verify_path(once, "106");
    CHECK(to_json(once).dump() == to_json(twice).dump());
}

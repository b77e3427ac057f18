#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ope/prompting.hpp"
#include "test_helpers.hpp"

using namespace ope;
using test_helpers::TempDir;
using test_helpers::make_query;
using test_helpers::write_file;

namespace {

// Planning text shaped like a real generation: bold strategy titles in tags.
const std::string kPlanningFixture =
    "The problem asks for the sum of qualifying divisors. The search space is finite, so the "
    "useful angles are factor structure, residues, pairing, and counting.\n\n"
    "<outline_1>**Prime Factorization Lens**\nWork from the factor structure to see which "
    "exponent choices matter.</outline_1>\n"
    "<outline_2>**Modular Arithmetic Filter**\nFilter candidates by their residue modulo "
    "10.</outline_2>\n"
    "<outline_3>**Divisor Pair Symmetry**\nPair divisors whose product is fixed to halve the "
    "work.</outline_3>\n"
    "<outline_4>**Combinatorial Counting Strategy**\nCount exponent combinations that satisfy "
    "the constraint.</outline_4>\n";

OutlineSet random_outline_set(std::mt19937_64& rng, int n) {
    OutlineSet set;
    set.query_id = "q";
    if (rng() % 2 == 0) set.analysis = "analysis " + std::to_string(rng() % 1000);
    for (int i = 1; i <= n; ++i) {
        std::string text = "strategy";
        const int words = 1 + static_cast<int>(rng() % 5);
        for (int w = 0; w < words; ++w) text += " w" + std::to_string(rng() % 50);
        set.outlines.push_back(Outline{i, text});
    }
    return set;
}

}  // namespace

TEST_CASE("build_planning_prompt names n and the tag format") {
    const auto q = make_query("q1", "82");
    const auto bundle = build_planning_prompt(q, 4);
    CHECK(bundle.system == PromptTemplates::defaults().planning_system);
    CHECK(bundle.user.find(q.problem) != std::string::npos);
    CHECK(bundle.user.find("exactly 4") != std::string::npos);
    CHECK(bundle.user.find("<outline_i>...</outline_i>") != std::string::npos);
    REQUIRE(bundle.role_sequence.size() == 2);
    CHECK(bundle.role_sequence[0].first == "system");
    CHECK(bundle.role_sequence[1].first == "user");

    const auto one = build_planning_prompt(q, 1);
    CHECK(one.user.find("exactly 1") != std::string::npos);

    // determinism: byte-identical output for identical inputs
    CHECK(build_planning_prompt(q, 4).user == bundle.user);
    CHECK_THROWS_AS(build_planning_prompt(q, 0), std::invalid_argument);
}

TEST_CASE("parse_outlines extracts four tagged outlines and the analysis") {
    const auto set = parse_outlines(kPlanningFixture, 4, "q1");
    REQUIRE(set.outlines.size() == 4);
    CHECK(set.outlines[0].text.rfind("**Prime Factorization Lens**", 0) == 0);
    CHECK(set.outlines[1].index == 2);
    CHECK(set.analysis.rfind("The problem asks", 0) == 0);
    CHECK(set.raw_text == kPlanningFixture);
}

TEST_CASE("parse_outlines reports the first missing index") {
    CHECK_NOTHROW(parse_outlines("<outline_1>a</outline_1>", 1));
    const auto set = parse_outlines("<outline_1>a</outline_1>", 1);
    CHECK(set.outlines[0].text == "a");
    CHECK(set.analysis.empty());

    try {
        parse_outlines("<outline_1>a</outline_1>", 4);
        FAIL("expected OutlineParseError");
    } catch (const OutlineParseError& e) {
        CHECK(e.index == 2);
        CHECK(e.reason == OutlineParseError::Reason::missing);
    }
}

TEST_CASE("parse_outlines rejects duplicated and out-of-order tags") {
    try {
        parse_outlines("<outline_1>a</outline_1><outline_1>b</outline_1>", 1);
        FAIL("expected duplicate error");
    } catch (const OutlineParseError& e) {
        CHECK(e.reason == OutlineParseError::Reason::duplicated);
        CHECK(e.index == 1);
    }
    try {
        parse_outlines("<outline_2>b</outline_2><outline_1>a</outline_1>", 2);
        FAIL("expected out-of-order error");
    } catch (const OutlineParseError& e) {
        CHECK(e.reason == OutlineParseError::Reason::out_of_order);
        CHECK(e.index == 2);
    }
    CHECK_THROWS_AS(parse_outlines("<outline_1>a", 1), OutlineParseError);
}

TEST_CASE("parse recovers any rendered outline set") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        const auto set = random_outline_set(rng, n);
        const auto back = parse_outlines(render_outline_set(set), n, set.query_id);
        REQUIRE(back.outlines.size() == set.outlines.size());
        for (int i = 0; i < n; ++i) {
            CHECK(back.outlines[static_cast<std::size_t>(i)].index ==
                  set.outlines[static_cast<std::size_t>(i)].index);
            CHECK(back.outlines[static_cast<std::size_t>(i)].text ==
                  set.outlines[static_cast<std::size_t>(i)].text);
        }
        CHECK(back.analysis == set.analysis);
    }
}

TEST_CASE("build_path_prompt ends with the path token and keeps every outline") {
    const auto q = make_query("q1", "82");
    const auto set = parse_outlines(kPlanningFixture, 4, "q1");

    const auto p1 = build_path_prompt(q, set, 1);
    CHECK(p1.user.substr(p1.user.size() - 8) == "<path_1>");
    for (int i = 1; i <= 4; ++i) {
        const std::string tag = "<outline_" + std::to_string(i) + ">";
        CHECK(p1.user.find(tag) != std::string::npos);
    }
    CHECK(p1.user.rfind(q.problem, 0) == 0);

    const auto p4 = build_path_prompt(q, set, 4);
    CHECK(p4.user.substr(p4.user.size() - 8) == "<path_4>");

    CHECK_THROWS_AS(build_path_prompt(q, set, 5), std::out_of_range);
    CHECK_THROWS_AS(build_path_prompt(q, set, 0), std::out_of_range);
}

TEST_CASE("single-outline mode keeps only the conditioning outline") {
    const auto q = make_query("q1", "82");
    const auto set = parse_outlines(kPlanningFixture, 4, "q1");
    const auto p2 = build_path_prompt(q, set, 2, PathPromptMode::single_outline);
    CHECK(p2.user.find("<outline_2>") != std::string::npos);
    CHECK(p2.user.find("<outline_1>") == std::string::npos);
    CHECK(p2.user.find("<outline_3>") == std::string::npos);
    CHECK(p2.user.substr(p2.user.size() - 8) == "<path_2>");

    // build_reason_prompt produces the same single-outline assembly
    const auto r2 = build_reason_prompt(q, set.outlines[1]);
    CHECK(r2.user == p2.user);
}

TEST_CASE("path tokens render as literal markers") {
    CHECK(PathToken::make(1).rendered == "<path_1>");
    CHECK(PathToken::make(12).rendered == "<path_12>");
    CHECK_THROWS_AS(PathToken::make(0), std::invalid_argument);
}

TEST_CASE("build_naive_prompt is deterministic and boxes the answer") {
    const auto q = make_query("q1", "82");
    const auto a = build_naive_prompt(q);
    const auto b = build_naive_prompt(q);
    CHECK(a.user == b.user);
    CHECK(a.system == b.system);
    CHECK(a.user.find("\\boxed{}") != std::string::npos);
    CHECK(a.user.find(q.problem) != std::string::npos);
}

TEST_CASE("build_summary_prompt renders one thinker section per path") {
    const auto q = make_query("q1", "103");
    std::vector<ReasoningPath> paths;
    for (int i = 0; i < 4; ++i)
        paths.push_back(test_helpers::make_path("q1", std::to_string(80 + i), false, 10));

    const auto bundle = build_summary_prompt(q, paths);
    for (int i = 1; i <= 4; ++i) {
        const std::string section = "Thinker " + std::to_string(i) + ":";
        CHECK(bundle.user.find(section) != std::string::npos);
    }
    CHECK(bundle.user.find("Thinker 5:") == std::string::npos);
    CHECK(bundle.user.find(q.problem) != std::string::npos);
    CHECK(bundle.system == PromptTemplates::defaults().summary_system);

    const auto single = build_summary_prompt(q, {paths[0]});
    CHECK(single.user.find("Thinker 1:") != std::string::npos);
    CHECK(single.user.find("Thinker 2:") == std::string::npos);

    CHECK(build_summary_prompt(q, paths).user == bundle.user);
    CHECK_THROWS_AS(build_summary_prompt(q, {}), std::invalid_argument);
}

TEST_CASE("template directory overrides individual assets") {
    TempDir tmp("templates");
    write_file(tmp.file("naive_system.txt"), "custom solver persona\n");
    const auto tpl = PromptTemplates::load_dir(tmp.path());
    CHECK(tpl.naive_system == "custom solver persona");
    // untouched fields keep their defaults
    CHECK(tpl.planning_system == PromptTemplates::defaults().planning_system);
    const auto q = make_query("q1", "1");
    CHECK(build_naive_prompt(q, tpl).system == "custom solver persona");
}

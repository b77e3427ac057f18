#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ope/common.hpp"
#include "ope/model.hpp"

namespace ope {

// ----------------------------------------------------------------------------
// Prompt types
// ----------------------------------------------------------------------------

/// One system+user turn ready to ship to a chat backend.
struct PromptBundle {
    std::string system;
    std::string user;
    std::vector<std::pair<std::string, std::string>> role_sequence;
};

inline PromptBundle make_bundle(std::string system, std::string user) {
    PromptBundle b;
    b.system = std::move(system);
    b.user = std::move(user);
    b.role_sequence = {{"system", b.system}, {"user", b.user}};
    return b;
}

/// Single-document rendering of a bundle, used where training records need
/// the full prompt as standalone text.
inline std::string render_prompt_text(const PromptBundle& b) {
    return b.system + "\n\n" + b.user;
}

/// The literal conditioning marker appended to path prompts.
struct PathToken {
    int index = 0;
    std::string rendered;

    static PathToken make(int i) {
        if (i < 1) throw std::invalid_argument("path token index must be >= 1");
        return PathToken{i, "<path_" + std::to_string(i) + ">"};
    }
};

/// Which outline material a path prompt carries.
enum class PathPromptMode {
    full_block,      // all N outlines, then the path token
    single_outline,  // only outline i, then the path token
};

inline std::string to_string(PathPromptMode m) {
    return m == PathPromptMode::full_block ? "full-block" : "single-outline";
}

inline PathPromptMode path_prompt_mode_from_string(std::string_view s) {
    if (s == "full-block") return PathPromptMode::full_block;
    if (s == "single-outline") return PathPromptMode::single_outline;
    throw ParseError("unknown path prompt mode: " + std::string(s));
}

// ----------------------------------------------------------------------------
// Templates
// ----------------------------------------------------------------------------

namespace templates_v1 {

inline constexpr std::string_view planning_system =
    R"(You are an advanced reasoning assistant capable of Outline-Guided Parallel Thinking.

Instructions:

1. Analysis & Planning: Analyze the query and generate several distinct and diverse outlines representing different solving strategies. Each outline explores a different logical direction.

2. Independent Parallel Exploration: Generate reasoning paths strictly following each corresponding outline. Path P_i must execute the strategy prescribed in Outline O_i without deviation.)";

inline constexpr std::string_view planning_user =
    R"({problem}

First write a brief analysis of the problem. Then generate exactly {n} distinct reasoning outlines, each following a different solving strategy. Wrap the i-th outline in the tags <outline_i>...</outline_i>, numbered 1 through {n}.)";

inline constexpr std::string_view naive_system =
    "You are an expert reasoning assistant. Solve the given problem step by step.";

inline constexpr std::string_view naive_user =
    R"({problem}

Reason step by step, and put your final answer within \boxed{}.)";

inline constexpr std::string_view summary_system =
    R"(You are a great reasoner.
Here is a problem, and multiple thinkers attempt to give their thought processes independently.
Each thinker has written its own thought process towards the final answer. Each thinker is encouraged to take the other thinkers' progress into account to reach the final answer.)";

inline constexpr std::string_view summary_user =
    R"(# ====== Problem ======

{problem}

# ====== Thinkers Thought Process ======

{thinkers}

Look at the above problem and thought process from each thinker, summarize from these thought processes and finally give your answer within \boxed.
Summarize their thinking on the problem and try to summarize the thinking of these thinkers. Analyze the differences in thinking between these thinkers and try to analyze which thought process is correct.

Note:
- It is generally believed that when most thinkers get the same answer, the answer may be correct. But you can't do it so superficially, because the correct answer may come from very few thinkers, or even no thinker gives the correct answer. For this reason, when you summarizing, you NEED adhere to the principles of professionalism and critical thinking, carefully identify these thought processes, and give a summary and final answer.
- If you realize that none of these thinkers have answered correctly, you can even learn from the wrong experiences in the thought process of these thinkers and re-think the given problem to give the answer you think is most correct.
- Please DO NOT just solve the given problem independently like other thinkers, but summarize the thought process of all thinkers. In other words, you need to give the summary first, and then give the final answer within \boxed, you can re-think this problem only if you realize that none of these thinkers have answered correctly.)";

inline constexpr std::string_view thinker_section = "Thinker {i}:\n{path}";

}  // namespace templates_v1

/// The text assets behind every builder. Defaults are compiled in; a directory
/// of plain-text files (one per field, named <field>.txt) overrides them at
/// startup so prompts can be iterated without rebuilding. Placeholders:
/// {problem}, {n}, {thinkers}, {i}, {path}.
struct PromptTemplates {
    std::string version = "1";
    std::string planning_system{templates_v1::planning_system};
    std::string planning_user{templates_v1::planning_user};
    std::string path_system{templates_v1::planning_system};
    std::string naive_system{templates_v1::naive_system};
    std::string naive_user{templates_v1::naive_user};
    std::string summary_system{templates_v1::summary_system};
    std::string summary_user{templates_v1::summary_user};
    std::string thinker_section{templates_v1::thinker_section};

    static const PromptTemplates& defaults() {
        static const PromptTemplates instance{};
        return instance;
    }

    static PromptTemplates load_dir(const std::filesystem::path& dir) {
        PromptTemplates t;
        auto load = [&](const char* name, std::string& field) {
            const auto file = dir / (std::string(name) + ".txt");
            if (!std::filesystem::exists(file)) return;
            std::ifstream in(file);
            if (!in) throw IoError("cannot read template: " + file.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            std::string text = buf.str();
            if (!text.empty() && text.back() == '\n') text.pop_back();
            field = std::move(text);
        };
        load("planning_system", t.planning_system);
        load("planning_user", t.planning_user);
        load("path_system", t.path_system);
        load("naive_system", t.naive_system);
        load("naive_user", t.naive_user);
        load("summary_system", t.summary_system);
        load("summary_user", t.summary_user);
        load("thinker_section", t.thinker_section);
        t.version = "dir:" + dir.string();
        return t;
    }
};

// ----------------------------------------------------------------------------
// Outline tag grammar
// ----------------------------------------------------------------------------

/// A planning generation that cannot be parsed. Retryable upstream: callers
/// regenerate rather than abort.
class OutlineParseError : public ParseError {
public:
    enum class Reason { missing, duplicated, out_of_order, unclosed };

    OutlineParseError(Reason r, int idx, const std::string& msg)
        : ParseError(msg), reason(r), index(idx) {}

    Reason reason;
    int index;
};

namespace detail {

inline std::optional<std::size_t> find_unique(std::string_view text, std::string_view tag,
                                              bool& duplicated) {
    const std::size_t first = text.find(tag);
    if (first == std::string_view::npos) return std::nullopt;
    duplicated = text.find(tag, first + 1) != std::string_view::npos;
    return first;
}

}  // namespace detail

/// Extracts the analysis and outlines 1..n from a raw planning generation.
/// The grammar is flat: exact literal tags, each exactly once, in order.
inline OutlineSet parse_outlines(std::string_view raw, int n, std::string_view query_id = {}) {
    if (n < 1) throw std::invalid_argument("parse_outlines: n must be >= 1");
    OutlineSet set;
    set.query_id = std::string(query_id);
    set.raw_text = std::string(raw);

    std::size_t last_end = 0;
    std::size_t first_open = std::string_view::npos;
    for (int i = 1; i <= n; ++i) {
        const std::string open = "<outline_" + std::to_string(i) + ">";
        const std::string close = "</outline_" + std::to_string(i) + ">";
        bool dup_open = false;
        bool dup_close = false;
        const auto open_pos = detail::find_unique(raw, open, dup_open);
        if (!open_pos)
            throw OutlineParseError(OutlineParseError::Reason::missing, i,
                                    "missing tag " + open);
        const auto close_pos = detail::find_unique(raw, close, dup_close);
        if (!close_pos)
            throw OutlineParseError(OutlineParseError::Reason::unclosed, i,
                                    "missing tag " + close);
        if (dup_open || dup_close)
            throw OutlineParseError(OutlineParseError::Reason::duplicated, i,
                                    "duplicated tag for outline " + std::to_string(i));
        if (*open_pos < last_end || *close_pos < *open_pos)
            throw OutlineParseError(OutlineParseError::Reason::out_of_order, i,
                                    "outline " + std::to_string(i) + " tags out of order");
        if (i == 1) first_open = *open_pos;
        const std::size_t body_begin = *open_pos + open.size();
        set.outlines.push_back(Outline{i, trim(raw.substr(body_begin, *close_pos - body_begin))});
        last_end = *close_pos + close.size();
    }
    set.analysis = trim(raw.substr(0, first_open));
    return set;
}

/// Renders the tag block for all outlines in a set.
inline std::string render_outline_block(const OutlineSet& set) {
    std::string out;
    for (std::size_t i = 0; i < set.outlines.size(); ++i) {
        const auto& o = set.outlines[i];
        if (i > 0) out += "\n";
        out += "<outline_" + std::to_string(o.index) + ">" + o.text + "</outline_" +
               std::to_string(o.index) + ">";
    }
    return out;
}

/// Full rendering: analysis (when present) followed by the tag block.
/// parse_outlines() recovers the same set from this text.
inline std::string render_outline_set(const OutlineSet& set) {
    if (set.analysis.empty()) return render_outline_block(set);
    return set.analysis + "\n\n" + render_outline_block(set);
}

inline std::string render_outline_tag(const Outline& o) {
    return "<outline_" + std::to_string(o.index) + ">" + o.text + "</outline_" +
           std::to_string(o.index) + ">";
}

// ----------------------------------------------------------------------------
// Builders (pure functions of their inputs)
// ----------------------------------------------------------------------------

inline PromptBundle build_planning_prompt(const Query& q, int n,
                                          const PromptTemplates& tpl = PromptTemplates::defaults()) {
    if (n < 1) throw std::invalid_argument("build_planning_prompt: n must be >= 1");
    std::string user = replace_all(tpl.planning_user, "{problem}", q.problem);
    user = replace_all(std::move(user), "{n}", std::to_string(n));
    return make_bundle(tpl.planning_system, std::move(user));
}

/// Path prompt: problem, outline material, then the path token as the final
/// characters. full_block keeps all N outlines; single_outline keeps only O_i.
inline PromptBundle build_path_prompt(const Query& q, const OutlineSet& set, int i,
                                      PathPromptMode mode = PathPromptMode::full_block,
                                      const PromptTemplates& tpl = PromptTemplates::defaults()) {
    if (i < 1 || static_cast<std::size_t>(i) > set.outlines.size())
        throw std::out_of_range("build_path_prompt: outline index " + std::to_string(i) +
                                " out of range 1.." + std::to_string(set.outlines.size()));
    const std::string block = mode == PathPromptMode::full_block
                                  ? render_outline_block(set)
                                  : render_outline_tag(set.outlines[static_cast<std::size_t>(i - 1)]);
    std::string user = q.problem + "\n\n" + block + "\n\n" + PathToken::make(i).rendered;
    return make_bundle(tpl.path_system, std::move(user));
}

/// The [query, outline, path token] assembly used when only one outline exists.
inline PromptBundle build_reason_prompt(const Query& q, const Outline& outline,
                                        const PromptTemplates& tpl = PromptTemplates::defaults()) {
    std::string user =
        q.problem + "\n\n" + render_outline_tag(outline) + "\n\n" + PathToken::make(outline.index).rendered;
    return make_bundle(tpl.path_system, std::move(user));
}

inline PromptBundle build_naive_prompt(const Query& q,
                                       const PromptTemplates& tpl = PromptTemplates::defaults()) {
    return make_bundle(tpl.naive_system, replace_all(tpl.naive_user, "{problem}", q.problem));
}

/// Summary prompt over a path set: one "Thinker k:" section per path, in order.
inline PromptBundle build_summary_prompt(const Query& q, const std::vector<ReasoningPath>& paths,
                                         const PromptTemplates& tpl = PromptTemplates::defaults()) {
    if (paths.empty()) throw std::invalid_argument("build_summary_prompt: path list is empty");
    std::string thinkers;
    for (std::size_t k = 0; k < paths.size(); ++k) {
        if (k > 0) thinkers += "\n\n";
        std::string section = replace_all(tpl.thinker_section, "{i}", std::to_string(k + 1));
        section = replace_all(std::move(section), "{path}", paths[k].text);
        thinkers += section;
    }
    std::string user = replace_all(tpl.summary_user, "{problem}", q.problem);
    user = replace_all(std::move(user), "{thinkers}", thinkers);
    return make_bundle(tpl.summary_system, std::move(user));
}

}  // namespace ope

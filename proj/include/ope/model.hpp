#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ope/common.hpp"

namespace ope {

using ojson = nlohmann::ordered_json;

/// Line format version stamped on every serialized record.
inline constexpr std::string_view kSchemaVersion = "1";

enum class Mode { naive, ope };

inline std::string to_string(Mode m) { return m == Mode::naive ? "naive" : "ope"; }

inline Mode mode_from_string(std::string_view s) {
    if (s == "naive") return Mode::naive;
    if (s == "ope") return Mode::ope;
    throw ParseError("unknown mode: " + std::string(s));
}

// ----------------------------------------------------------------------------
// Domain types
// ----------------------------------------------------------------------------

/// A problem with a verifiable ground-truth answer.
struct Query {
    std::string id;
    std::string problem;
    std::string ground_truth;
};

/// One strategy description, 1-indexed within its set.
struct Outline {
    int index = 0;
    std::string text;
};

/// The analysis plus N tagged outlines produced by one planning generation.
struct OutlineSet {
    std::string query_id;
    std::string analysis;
    std::vector<Outline> outlines;
    std::string raw_text;
};

/// One sampled trajectory with its verification state.
struct ReasoningPath {
    std::string query_id;
    Mode mode = Mode::naive;
    std::optional<int> outline_index;  // present iff mode == ope
    std::string text;
    long long completion_tokens = 0;
    bool approx_tokens = false;  // true when counted by whitespace, not backend usage
    std::optional<std::string> extracted_answer;
    std::optional<std::string> canonical_answer;
    std::optional<bool> correct;
    bool truncated = false;
};

/// Decoding settings; defaults follow the evaluation setup this library targets.
struct SamplingParams {
    double temperature = 0.6;
    double top_p = 0.95;
    int max_tokens = 8192;
    int n_samples = 1;
    long long seed = 0;
};

/// Everything sampled for one query in one run.
struct ExplorationRecord {
    Query query;
    Mode mode = Mode::naive;
    std::optional<OutlineSet> outline_set;
    std::vector<ReasoningPath> paths;
    SamplingParams sampling;
    std::string run_id;
};

struct RunManifest {
    std::string run_id;
    std::string created_at;
    std::string config_digest;
    long long seed = 0;
    std::string mode;
    std::string backend;
    std::string path_prompt_mode;
    std::size_t query_count = 0;
    std::size_t record_count = 0;
};

// ----------------------------------------------------------------------------
// Validation
// ----------------------------------------------------------------------------

inline void validate(const Query& q) {
    if (q.id.empty()) throw ParseError("query id must be non-empty");
    if (q.ground_truth.empty()) throw ParseError("query " + q.id + ": answer must be non-empty");
}

inline void validate(const OutlineSet& set) {
    for (std::size_t i = 0; i < set.outlines.size(); ++i) {
        if (set.outlines[i].index != static_cast<int>(i) + 1)
            throw ParseError("outline indices must run 1..N in order");
        if (set.outlines[i].text.empty()) throw ParseError("outline text must be non-empty");
    }
}

inline void validate(const ReasoningPath& p) {
    if ((p.mode == Mode::ope) != p.outline_index.has_value())
        throw ParseError("outline_index must be present exactly for ope paths");
    if (p.canonical_answer && !p.extracted_answer)
        throw ParseError("canonical_answer requires extracted_answer");
    if (p.correct && *p.correct && !p.canonical_answer)
        throw ParseError("correct=true requires a canonical_answer");
    if (p.completion_tokens < 0) throw ParseError("completion_tokens must be >= 0");
}

inline void validate(const ExplorationRecord& r) {
    validate(r.query);
    if (r.mode == Mode::ope) {
        if (!r.outline_set) throw ParseError("record " + r.query.id + ": ope mode requires an outline set");
        validate(*r.outline_set);
        const std::size_t expected =
            r.outline_set->outlines.size() * static_cast<std::size_t>(r.sampling.n_samples);
        if (r.paths.size() != expected)
            throw ParseError("record " + r.query.id + ": expected " + std::to_string(expected) +
                             " paths, found " + std::to_string(r.paths.size()));
    } else if (r.outline_set) {
        throw ParseError("record " + r.query.id + ": naive mode must not carry an outline set");
    }
    for (const auto& p : r.paths) {
        validate(p);
        if (p.query_id != r.query.id)
            throw ParseError("record " + r.query.id + ": path query_id mismatch");
        if (p.mode != r.mode) throw ParseError("record " + r.query.id + ": path mode mismatch");
    }
}

// ----------------------------------------------------------------------------
// JSON mapping
// ----------------------------------------------------------------------------

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field: ") + key);
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad field ") + key + ": " + e.what());
    }
}

template <typename T>
std::optional<T> maybe(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad field ") + key + ": " + e.what());
    }
}

inline void check_schema_version(const nlohmann::json& j) {
    const auto v = require<std::string>(j, "schema_version");
    if (v != kSchemaVersion)
        throw ParseError("unsupported schema_version \"" + v + "\" (expected \"" +
                         std::string(kSchemaVersion) + "\")");
}

}  // namespace detail

inline ojson to_json(const Query& q) {
    return ojson{{"id", q.id}, {"problem", q.problem}, {"answer", q.ground_truth}};
}

inline Query query_from_json(const nlohmann::json& j) {
    Query q;
    q.id = detail::require<std::string>(j, "id");
    q.problem = detail::require<std::string>(j, "problem");
    q.ground_truth = detail::require<std::string>(j, "answer");
    validate(q);
    return q;
}

inline ojson to_json(const OutlineSet& s) {
    ojson outlines = ojson::array();
    for (const auto& o : s.outlines) outlines.push_back(ojson{{"index", o.index}, {"text", o.text}});
    return ojson{{"query_id", s.query_id},
                 {"analysis", s.analysis},
                 {"outlines", std::move(outlines)},
                 {"raw_text", s.raw_text}};
}

inline OutlineSet outline_set_from_json(const nlohmann::json& j) {
    OutlineSet s;
    s.query_id = detail::require<std::string>(j, "query_id");
    s.analysis = detail::require<std::string>(j, "analysis");
    s.raw_text = detail::require<std::string>(j, "raw_text");
    for (const auto& oj : detail::require<nlohmann::json>(j, "outlines")) {
        Outline o;
        o.index = detail::require<int>(oj, "index");
        o.text = detail::require<std::string>(oj, "text");
        s.outlines.push_back(std::move(o));
    }
    return s;
}

inline ojson to_json(const SamplingParams& p) {
    return ojson{{"temperature", p.temperature},
                 {"top_p", p.top_p},
                 {"max_tokens", p.max_tokens},
                 {"n_samples", p.n_samples},
                 {"seed", p.seed}};
}

inline SamplingParams sampling_from_json(const nlohmann::json& j) {
    SamplingParams p;
    p.temperature = detail::require<double>(j, "temperature");
    p.top_p = detail::require<double>(j, "top_p");
    p.max_tokens = detail::require<int>(j, "max_tokens");
    p.n_samples = detail::require<int>(j, "n_samples");
    p.seed = detail::require<long long>(j, "seed");
    return p;
}

inline ojson to_json(const ReasoningPath& p) {
    ojson j{{"query_id", p.query_id}, {"mode", to_string(p.mode)}};
    if (p.outline_index) j["outline_index"] = *p.outline_index;
    j["text"] = p.text;
    j["completion_tokens"] = p.completion_tokens;
    j["approx_tokens"] = p.approx_tokens;
    if (p.extracted_answer) j["extracted_answer"] = *p.extracted_answer;
    if (p.canonical_answer) j["canonical_answer"] = *p.canonical_answer;
    if (p.correct) j["correct"] = *p.correct;
    j["truncated"] = p.truncated;
    return j;
}

inline ReasoningPath path_from_json(const nlohmann::json& j) {
    ReasoningPath p;
    p.query_id = detail::require<std::string>(j, "query_id");
    p.mode = mode_from_string(detail::require<std::string>(j, "mode"));
    p.outline_index = detail::maybe<int>(j, "outline_index");
    p.text = detail::require<std::string>(j, "text");
    p.completion_tokens = detail::require<long long>(j, "completion_tokens");
    p.approx_tokens = detail::require<bool>(j, "approx_tokens");
    p.extracted_answer = detail::maybe<std::string>(j, "extracted_answer");
    p.canonical_answer = detail::maybe<std::string>(j, "canonical_answer");
    p.correct = detail::maybe<bool>(j, "correct");
    p.truncated = detail::require<bool>(j, "truncated");
    validate(p);
    return p;
}

inline ojson to_json(const ExplorationRecord& r) {
    validate(r);
    ojson j{{"schema_version", kSchemaVersion}, {"run_id", r.run_id}, {"mode", to_string(r.mode)}};
    j["query"] = to_json(r.query);
    if (r.outline_set) j["outline_set"] = to_json(*r.outline_set);
    ojson paths = ojson::array();
    for (const auto& p : r.paths) paths.push_back(to_json(p));
    j["paths"] = std::move(paths);
    j["sampling"] = to_json(r.sampling);
    return j;
}

inline ExplorationRecord record_from_json(const nlohmann::json& j) {
    detail::check_schema_version(j);
    ExplorationRecord r;
    r.run_id = detail::require<std::string>(j, "run_id");
    r.mode = mode_from_string(detail::require<std::string>(j, "mode"));
    r.query = query_from_json(detail::require<nlohmann::json>(j, "query"));
    if (auto os = detail::maybe<nlohmann::json>(j, "outline_set"))
        r.outline_set = outline_set_from_json(*os);
    for (const auto& pj : detail::require<nlohmann::json>(j, "paths"))
        r.paths.push_back(path_from_json(pj));
    r.sampling = sampling_from_json(detail::require<nlohmann::json>(j, "sampling"));
    validate(r);
    return r;
}

inline ojson to_json(const RunManifest& m) {
    return ojson{{"schema_version", kSchemaVersion},
                 {"run_id", m.run_id},
                 {"created_at", m.created_at},
                 {"config_digest", m.config_digest},
                 {"seed", m.seed},
                 {"mode", m.mode},
                 {"backend", m.backend},
                 {"path_prompt_mode", m.path_prompt_mode},
                 {"counts", ojson{{"queries", m.query_count}, {"records", m.record_count}}}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    detail::check_schema_version(j);
    RunManifest m;
    m.run_id = detail::require<std::string>(j, "run_id");
    m.created_at = detail::require<std::string>(j, "created_at");
    m.config_digest = detail::require<std::string>(j, "config_digest");
    m.seed = detail::require<long long>(j, "seed");
    m.mode = detail::require<std::string>(j, "mode");
    m.backend = detail::require<std::string>(j, "backend");
    m.path_prompt_mode = detail::require<std::string>(j, "path_prompt_mode");
    const auto counts = detail::require<nlohmann::json>(j, "counts");
    m.query_count = detail::require<std::size_t>(counts, "queries");
    m.record_count = detail::require<std::size_t>(counts, "records");
    return m;
}

// ----------------------------------------------------------------------------
// Line-oriented persistence
// ----------------------------------------------------------------------------

/// Loads a query file: one JSON object per line, ids unique.
inline std::vector<Query> load_queries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open query file: " + path.string());
    std::vector<Query> queries;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": malformed JSON line: " + e.what());
        }
        Query q;
        try {
            q = query_from_json(j);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!seen.insert(q.id).second)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate query id \"" +
                             q.id + "\"");
        queries.push_back(std::move(q));
    }
    return queries;
}

/// Single-writer JSONL sink; flushes after every line so partial runs stay readable.
class RecordWriter {
public:
    explicit RecordWriter(const std::filesystem::path& path, bool append = false)
        : path_(path), out_(path, append ? std::ios::app : std::ios::trunc) {
        if (!out_) throw IoError("cannot open for writing: " + path.string());
    }

    void write(const ExplorationRecord& r) { write_line(to_json(r)); }

    void write_line(const ojson& j) {
        out_ << j.dump() << '\n';
        out_.flush();
        if (!out_)
            throw IoError("write failed on " + path_.string() + " after " +
                          std::to_string(count_) + " lines");
        ++count_;
    }

    std::size_t count() const { return count_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t count_ = 0;
};

template <typename Range>
std::size_t write_records(const Range& records, const std::filesystem::path& path,
                          bool append = false) {
    RecordWriter writer(path, append);
    for (const auto& r : records) writer.write(r);
    return writer.count();
}

/// Lazy line-by-line reader over a record file.
class RecordReader {
public:
    explicit RecordReader(const std::filesystem::path& path) : path_(path), in_(path) {
        if (!in_) throw IoError("cannot open record file: " + path.string());
    }

    std::optional<ExplorationRecord> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++lineno_;
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(path_.string() + ":" + std::to_string(lineno_) +
                                 ": malformed JSON line: " + e.what());
            }
            try {
                return record_from_json(j);
            } catch (const ParseError& e) {
                throw ParseError(path_.string() + ":" + std::to_string(lineno_) + ": " + e.what());
            }
        }
        return std::nullopt;
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t lineno_ = 0;
};

inline std::vector<ExplorationRecord> read_records(const std::filesystem::path& path) {
    RecordReader reader(path);
    std::vector<ExplorationRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    return out;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << to_json(m).dump(2) << '\n';
    if (!out) throw IoError("manifest write failed: " + path.string());
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed manifest " + path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

}  // namespace ope

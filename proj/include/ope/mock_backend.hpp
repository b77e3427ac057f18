#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ope/backend.hpp"
#include "ope/common.hpp"

namespace ope {

/// A matched prompt got no scripted behavior: a test-bug signal, never retried.
class MockMissError : public Error {
public:
    using Error::Error;
};

/// One scripted behavior. Rules are tried in file order; the first match wins.
/// Matching is by substring over the concatenated message contents, or by the
/// request fingerprint in hex.
struct MockRule {
    std::string contains;
    std::optional<std::string> fingerprint;
    std::vector<std::string> responses;        // consumed in order, last repeats
    std::map<std::string, double> answers;     // stochastic alternative to responses
    std::string answer_template = "The final answer is \\boxed{{answer}}.";
    int fail_times = 0;                        // -1: every call fails
    int fail_status = 503;
    int delay_ms = 0;
    std::optional<std::string> finish_reason;  // force "length" etc.
};

/// Deterministic scripted backend. Every behavior is a pure function of
/// (script, seed, request), independent of thread scheduling: cursors and
/// stochastic draws are keyed per request fingerprint.
class MockBackend : public ChatBackend {
public:
    MockBackend(std::vector<MockRule> rules, std::uint64_t seed, std::string label = "inline")
        : rules_(std::move(rules)), seed_(seed), label_(std::move(label)) {}

    static std::shared_ptr<MockBackend> from_json(const nlohmann::json& j, std::uint64_t seed,
                                                  std::string label = "inline") {
        std::vector<MockRule> rules;
        const auto rules_json = j.find("rules");
        if (rules_json == j.end() || !rules_json->is_array())
            throw ParseError("mock script needs a top-level rules array");
        for (const auto& rj : *rules_json) {
            MockRule r;
            if (rj.contains("contains")) r.contains = rj["contains"].get<std::string>();
            if (rj.contains("fingerprint")) r.fingerprint = rj["fingerprint"].get<std::string>();
            if (rj.contains("responses"))
                r.responses = rj["responses"].get<std::vector<std::string>>();
            if (rj.contains("answers"))
                r.answers = rj["answers"].get<std::map<std::string, double>>();
            if (rj.contains("template")) r.answer_template = rj["template"].get<std::string>();
            if (rj.contains("fail_times")) r.fail_times = rj["fail_times"].get<int>();
            if (rj.contains("fail_status")) r.fail_status = rj["fail_status"].get<int>();
            if (rj.contains("delay_ms")) r.delay_ms = rj["delay_ms"].get<int>();
            if (rj.contains("finish_reason"))
                r.finish_reason = rj["finish_reason"].get<std::string>();
            if (r.responses.empty() && r.answers.empty() && r.fail_times == 0)
                throw ParseError("mock rule has neither responses, answers, nor failures");
            rules.push_back(std::move(r));
        }
        return std::make_shared<MockBackend>(std::move(rules), seed, std::move(label));
    }

    static std::shared_ptr<MockBackend> from_script(const std::filesystem::path& path,
                                                    std::uint64_t seed) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open mock script: " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("malformed mock script " + path.string() + ": " + e.what());
        }
        return from_json(j, seed, path.string());
    }

    ChatResponse complete(const ChatRequest& request) override {
        struct InFlight {
            explicit InFlight(MockBackend& b) : backend(b) {
                const int now = backend.in_flight_.fetch_add(1) + 1;
                int peak = backend.high_water_.load();
                while (now > peak && !backend.high_water_.compare_exchange_weak(peak, now)) {}
            }
            ~InFlight() { backend.in_flight_.fetch_sub(1); }
            MockBackend& backend;
        } guard(*this);
        total_requests_.fetch_add(1);

        const std::size_t rule_index = match(request);
        const MockRule& rule = rules_[rule_index];
        if (rule.delay_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));

        const std::uint64_t fpr = request_fingerprint(request);
        long long call_index = 0;
        long long first_draw = 0;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            Cursor& cur = cursors_[{rule_index, fpr}];
            call_index = cur.calls++;
            if (rule.fail_times == -1 || call_index < rule.fail_times) {
                const bool transient =
                    rule.fail_status == 429 || rule.fail_status == 408 || rule.fail_status >= 500;
                throw BackendError("scripted failure (call " + std::to_string(call_index + 1) + ")",
                                   rule.fail_status, transient);
            }
            first_draw = cur.draws;
            cur.draws += request.n;
        }

        ChatResponse out;
        for (int j = 0; j < request.n; ++j)
            out.completions.push_back(render(rule, fpr, first_draw + j));
        return out;
    }

    std::string id() const override { return "mock:" + label_ + "#" + std::to_string(seed_); }

    /// Concurrency high-water mark observed so far.
    int max_in_flight() const { return high_water_.load(); }
    std::size_t total_requests() const { return total_requests_.load(); }

private:
    struct Cursor {
        long long calls = 0;
        long long draws = 0;
    };

    std::size_t match(const ChatRequest& request) const {
        std::string haystack;
        for (const auto& m : request.messages) {
            haystack += m.content;
            haystack += '\n';
        }
        const std::string fpr_hex = hex64(request_fingerprint(request));
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            const auto& r = rules_[i];
            if (r.fingerprint) {
                if (*r.fingerprint == fpr_hex) return i;
                continue;
            }
            if (r.contains.empty() || haystack.find(r.contains) != std::string::npos) return i;
        }
        throw MockMissError("no mock rule matches prompt: \"" +
                            haystack.substr(0, std::min<std::size_t>(haystack.size(), 96)) + "\"");
    }

    ChatCompletion render(const MockRule& rule, std::uint64_t fpr, long long draw_index) const {
        ChatCompletion c;
        if (!rule.responses.empty()) {
            const std::size_t i = std::min(static_cast<std::size_t>(draw_index),
                                           rule.responses.size() - 1);
            c.content = rule.responses[i];
        } else if (!rule.answers.empty()) {
            const double u = unit_uniform(
                splitmix64(mix_seed(mix_seed(seed_, fpr), static_cast<std::uint64_t>(draw_index))));
            double total = 0;
            for (const auto& [_, p] : rule.answers) total += p;
            double acc = 0;
            std::string chosen = rule.answers.rbegin()->first;
            for (const auto& [answer, p] : rule.answers) {
                acc += p / total;
                if (u < acc) {
                    chosen = answer;
                    break;
                }
            }
            c.content = replace_all(rule.answer_template, "{answer}", chosen);
        } else {
            throw MockMissError("mock rule matched but has no responses");
        }
        c.completion_tokens = approx_token_count(c.content);
        c.finish_reason =
            rule.finish_reason ? finish_reason_from_string(*rule.finish_reason) : FinishReason::stop;
        return c;
    }

    std::vector<MockRule> rules_;
    std::uint64_t seed_;
    std::string label_;

    mutable std::mutex mutex_;
    std::map<std::pair<std::size_t, std::uint64_t>, Cursor> cursors_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> high_water_{0};
    std::atomic<std::size_t> total_requests_{0};
};

}  // namespace ope

#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ope/common.hpp"
#include "ope/model.hpp"
#include "ope/prompting.hpp"

namespace ope {

// ----------------------------------------------------------------------------
// Wire types
// ----------------------------------------------------------------------------

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    SamplingParams sampling;
    int n = 1;
};

enum class FinishReason { stop, length, other };

inline FinishReason finish_reason_from_string(std::string_view s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    return FinishReason::other;
}

struct ChatCompletion {
    std::string content;
    FinishReason finish_reason = FinishReason::stop;
    std::optional<long long> completion_tokens;  // from the backend's usage report
};

struct ChatResponse {
    std::vector<ChatCompletion> completions;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds base_delay{500};
    bool jitter = true;
};

struct BackendConfig {
    std::string base_url;
    std::string model;
    std::string api_key_env = "OPE_API_KEY";
    int max_concurrency = 8;
    RetryPolicy retry;
    std::chrono::seconds timeout{600};
    bool server_side_n = true;  // false: expand n>1 into n independent requests
};

inline ChatRequest make_request(std::string model, const PromptBundle& bundle,
                                SamplingParams sampling, int n = 1) {
    ChatRequest req;
    req.model = std::move(model);
    for (const auto& [role, content] : bundle.role_sequence)
        req.messages.push_back(ChatMessage{role, content});
    req.sampling = sampling;
    req.n = n;
    return req;
}

/// Stable identity of a request; the scripted mock keys its cursors on this.
inline std::uint64_t request_fingerprint(const ChatRequest& r) {
    std::uint64_t h = fnv1a64(r.model);
    for (const auto& m : r.messages) {
        h = mix_seed(h, fnv1a64(m.role));
        h = mix_seed(h, fnv1a64(m.content));
    }
    h = mix_seed(h, static_cast<std::uint64_t>(r.sampling.seed));
    h = mix_seed(h, static_cast<std::uint64_t>(r.n));
    return h;
}

// ----------------------------------------------------------------------------
// Backend interface
// ----------------------------------------------------------------------------

/// The only surface that performs I/O against an inference service.
/// Implementations must be safe to call from multiple threads.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

// ----------------------------------------------------------------------------
// Retry with exponential backoff
// ----------------------------------------------------------------------------

/// Pre-jitter delay for the given retry (0-based): base * 2^retry, capped at 60s.
inline std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry_index,
                                               std::uint64_t jitter_bits = 0) {
    static constexpr std::chrono::milliseconds kCap{60'000};
    auto delay = policy.base_delay;
    for (int i = 0; i < retry_index && delay < kCap; ++i) delay *= 2;
    if (delay > kCap) delay = kCap;
    if (policy.jitter && delay.count() > 0) {
        const double scale = 0.5 + 0.5 * unit_uniform(splitmix64(jitter_bits));
        delay = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(delay.count()) * scale));
    }
    return delay;
}

/// Decorator that retries transient failures (timeouts, 429, 5xx) with
/// exponential backoff. Non-transient errors pass through untouched.
class RetryingBackend : public ChatBackend {
public:
    using SleepFn = std::function<void(std::chrono::milliseconds)>;

    RetryingBackend(std::shared_ptr<ChatBackend> inner, RetryPolicy policy,
                    SleepFn sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
        : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleep)),
          jitter_state_(splitmix64(static_cast<std::uint64_t>(
              std::chrono::steady_clock::now().time_since_epoch().count()))) {}

    ChatResponse complete(const ChatRequest& request) override {
        for (int attempt = 1;; ++attempt) {
            try {
                return inner_->complete(request);
            } catch (const BackendError& e) {
                if (!e.transient || attempt >= policy_.max_attempts) throw;
                sleep_(backoff_delay(policy_, attempt - 1, jitter_state_.fetch_add(1)));
            }
        }
    }

    std::string id() const override { return inner_->id(); }

private:
    std::shared_ptr<ChatBackend> inner_;
    RetryPolicy policy_;
    SleepFn sleep_;
    std::atomic<std::uint64_t> jitter_state_;
};

/// Decorator for servers without n>1 sampling: expands a request into n
/// independent single-completion requests with derived seeds. Record shapes
/// are identical either way.
class SplitNBackend : public ChatBackend {
public:
    explicit SplitNBackend(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}

    ChatResponse complete(const ChatRequest& request) override {
        if (request.n <= 1) return inner_->complete(request);
        ChatResponse merged;
        for (int j = 0; j < request.n; ++j) {
            ChatRequest sub = request;
            sub.n = 1;
            sub.sampling.seed = static_cast<long long>(
                mix_seed(static_cast<std::uint64_t>(request.sampling.seed),
                         static_cast<std::uint64_t>(j) + 1));
            auto res = inner_->complete(sub);
            if (res.completions.size() != 1)
                throw ProtocolError("expected 1 completion from split request");
            merged.completions.push_back(std::move(res.completions.front()));
        }
        return merged;
    }

    std::string id() const override { return inner_->id() + "+n=client"; }

private:
    std::shared_ptr<ChatBackend> inner_;
};

// ----------------------------------------------------------------------------
// Bounded-concurrency fan-out
// ----------------------------------------------------------------------------

/// Outcome of one prompt in a batch; exactly one of response/error is set.
struct BatchItem {
    std::size_t index = 0;
    std::optional<ChatResponse> response;
    std::string error;

    bool ok() const { return response.has_value(); }
};

/// Dispatches every request with at most `max_concurrency` in flight. Results
/// come back keyed by request index; one failure never aborts the batch.
inline std::vector<BatchItem> sample_paths(ChatBackend& backend,
                                           const std::vector<ChatRequest>& requests,
                                           int max_concurrency) {
    if (requests.empty()) throw std::invalid_argument("sample_paths: empty request list");
    if (max_concurrency < 1) throw std::invalid_argument("sample_paths: max_concurrency must be >= 1");

    std::vector<BatchItem> results(requests.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_concurrency), requests.size());

    auto run = [&]() {
        for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
            results[i].index = i;
            try {
                results[i].response = backend.complete(requests[i]);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    return results;
}

/// Convenience overload over prompt bundles with shared sampling parameters.
inline std::vector<BatchItem> sample_paths(ChatBackend& backend, const std::string& model,
                                           const std::vector<PromptBundle>& prompts,
                                           SamplingParams sampling, int n, int max_concurrency) {
    std::vector<ChatRequest> requests;
    requests.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        SamplingParams per = sampling;
        per.seed = static_cast<long long>(
            mix_seed(static_cast<std::uint64_t>(sampling.seed), static_cast<std::uint64_t>(i)));
        requests.push_back(make_request(model, prompts[i], per, n));
    }
    return sample_paths(backend, requests, max_concurrency);
}

// ----------------------------------------------------------------------------
// Completion -> path conversion
// ----------------------------------------------------------------------------

/// Builds an unverified ReasoningPath from one completion. Token counts come
/// from the usage report when present, else a whitespace count flagged approximate.
inline ReasoningPath path_from_completion(const ChatCompletion& c, const std::string& query_id,
                                          Mode mode, std::optional<int> outline_index) {
    ReasoningPath p;
    p.query_id = query_id;
    p.mode = mode;
    p.outline_index = outline_index;
    p.text = c.content;
    if (c.completion_tokens) {
        p.completion_tokens = *c.completion_tokens;
        p.approx_tokens = false;
    } else {
        p.completion_tokens = approx_token_count(c.content);
        p.approx_tokens = true;
    }
    p.truncated = c.finish_reason == FinishReason::length;
    return p;
}

}  // namespace ope

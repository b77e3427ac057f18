#pragma once

#include <cstdlib>
#include <memory>
#include <string>
#include <tuple>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ope/backend.hpp"
#include "ope/common.hpp"

namespace ope {

namespace detail {

/// Splits "http://host:port/v1" into the client target and the path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw UsageError("backend base_url must include a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

}  // namespace detail

/// OpenAI-compatible chat-completions client. One attempt per call; retry
/// behavior comes from wrapping in RetryingBackend.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
        std::tie(host_, path_prefix_) = detail::split_base_url(config_.base_url);
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }

    ChatResponse complete(const ChatRequest& request) override {
        nlohmann::ordered_json body;
        body["model"] = request.model;
        auto messages = nlohmann::ordered_json::array();
        for (const auto& m : request.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        body["messages"] = std::move(messages);
        body["temperature"] = request.sampling.temperature;
        body["top_p"] = request.sampling.top_p;
        body["max_tokens"] = request.sampling.max_tokens;
        body["n"] = request.n;
        body["seed"] = request.sampling.seed;

        httplib::Client client(host_);
        client.set_connection_timeout(config_.timeout.count(), 0);
        client.set_read_timeout(config_.timeout.count(), 0);
        client.set_write_timeout(config_.timeout.count(), 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res)
            throw BackendError("request to " + host_ + " failed: " + httplib::to_string(res.error()),
                               0, true);
        if (res->status == 429 || res->status == 408 || res->status >= 500)
            throw BackendError("backend returned HTTP " + std::to_string(res->status), res->status,
                               true);
        if (res->status >= 400)
            throw BackendError("backend returned HTTP " + std::to_string(res->status) + ": " +
                                   res->body,
                               res->status, false);
        return parse_response(res->body, request.n);
    }

    std::string id() const override {
        return config_.base_url + "#" + config_.model +
               (config_.server_side_n ? "+n=server" : "+n=client");
    }

private:
    static ChatResponse parse_response(const std::string& body, int expected_n) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed completion body: ") + e.what());
        }
        ChatResponse out;
        const auto choices = j.find("choices");
        if (choices == j.end() || !choices->is_array())
            throw ProtocolError("completion body has no choices array");
        std::optional<long long> usage_tokens;
        if (auto usage = j.find("usage"); usage != j.end() && usage->contains("completion_tokens"))
            usage_tokens = usage->at("completion_tokens").get<long long>();
        for (const auto& choice : *choices) {
            ChatCompletion c;
            try {
                c.content = choice.at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw ProtocolError(std::string("malformed choice: ") + e.what());
            }
            if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
                c.finish_reason = finish_reason_from_string(choice["finish_reason"].get<std::string>());
            out.completions.push_back(std::move(c));
        }
        if (static_cast<int>(out.completions.size()) != expected_n)
            throw ProtocolError("expected " + std::to_string(expected_n) + " completions, got " +
                                std::to_string(out.completions.size()));
        // usage.completion_tokens is a per-request total; only attributable at n=1
        if (expected_n == 1 && usage_tokens) out.completions.front().completion_tokens = usage_tokens;
        return out;
    }

    BackendConfig config_;
    std::string host_;
    std::string path_prefix_;
    std::string api_key_;
};

/// Assembles the configured stack: HTTP transport, retry, optional client-side
/// n expansion.
inline std::shared_ptr<ChatBackend> make_http_backend(const BackendConfig& config) {
    std::shared_ptr<ChatBackend> stack = std::make_shared<HttpBackend>(config);
    stack = std::make_shared<RetryingBackend>(std::move(stack), config.retry);
    if (!config.server_side_n) stack = std::make_shared<SplitNBackend>(std::move(stack));
    return stack;
}

}  // namespace ope

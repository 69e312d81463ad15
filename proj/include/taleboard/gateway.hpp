#pragma once

#include "taleboard/error.hpp"
#include "taleboard/prompt_request.hpp"

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace taleboard {

enum class BackendKind { Live, Scripted, Template };

std::string_view backend_kind_name(BackendKind kind);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    virtual BackendKind kind() const = 0;

    // Returns the assistant's reply. Throws Error with a backend error code.
    virtual std::string send(const PromptRequest& request) = 0;
};

// Pops canned responses in order; fails loudly once the queue runs dry.
class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> responses);

    BackendKind kind() const override { return BackendKind::Scripted; }
    std::string send(const PromptRequest& request) override;

    std::size_t remaining() const;
    // Requests seen so far, in order.
    std::vector<PromptRequest> received() const;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> queue_;
    std::vector<PromptRequest> received_;
};

// Deterministic offline backend. Rules are matched in order against the
// request tag (glob patterns); the first match's response template is filled
// from request.facts using {key} slots. The rule list always ends in a "*"
// catch-all, so every request gets an answer.
class TemplateBackend final : public ChatBackend {
public:
    struct Rule {
        std::string pattern;
        std::string response;
    };

    TemplateBackend();
    explicit TemplateBackend(std::vector<Rule> rules);

    BackendKind kind() const override { return BackendKind::Template; }
    std::string send(const PromptRequest& request) override;

    static std::vector<Rule> default_rules();

private:
    std::vector<Rule> rules_;
};

struct LiveConfig {
    // Full URL of the chat-completions endpoint, e.g.
    // "https://api.openai.com/v1/chat/completions".
    std::string endpoint;
    std::string model;
    std::string api_key;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{1000};
    double temperature = 0.7;
    std::vector<std::pair<std::string, std::string>> extra_headers;
    // Injected for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleeper;

    // Reads CHAT_ENDPOINT, CHAT_MODEL and CHAT_API_KEY. nullopt when the
    // endpoint or model is unset.
    static std::optional<LiveConfig> from_env();
};

// OpenAI-compatible chat-completion client over HTTP(S).
class LiveBackend final : public ChatBackend {
public:
    explicit LiveBackend(LiveConfig config);

    BackendKind kind() const override { return BackendKind::Live; }
    std::string send(const PromptRequest& request) override;

    const LiveConfig& config() const { return config_; }

    // Wire body for a request (messages array with system/history/user roles).
    std::string request_body(const PromptRequest& request) const;
    // Delay before retry number `attempt` (1-based): base * 2^(attempt-1).
    std::chrono::milliseconds backoff_delay(int attempt) const;

private:
    LiveConfig config_;
};

struct ChatExchange {
    std::string tag;
    BackendKind backend = BackendKind::Template;
    std::string system;
    std::string user;
    std::size_t history_messages = 0;
    std::string response;
    long long latency_ms = 0;
    std::optional<std::string> error;
};

// Ordered, thread-safe record of every exchange; optionally mirrored to a
// JSONL file as records arrive.
class ExchangeLog {
public:
    ExchangeLog() = default;
    explicit ExchangeLog(const std::filesystem::path& jsonl_path);

    void append(ChatExchange exchange);
    std::vector<ChatExchange> entries() const;
    std::size_t size() const;

    static std::string to_jsonl_line(const ChatExchange& exchange);
    static ChatExchange from_jsonl_line(std::string_view line); // throws ParseError

private:
    mutable std::mutex mutex_;
    std::vector<ChatExchange> entries_;
    std::ofstream file_;
};

// Sends through `backend`, recording exactly one ChatExchange in `log` (when
// given) whether the call succeeds or throws.
std::string complete(ChatBackend& backend, const PromptRequest& request,
                     ExchangeLog* log = nullptr);

} // namespace taleboard

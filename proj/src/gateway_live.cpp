#include "taleboard/gateway.hpp"

#include "http_util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

namespace taleboard {

using nlohmann::json;

std::optional<LiveConfig> LiveConfig::from_env() {
    auto env = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? std::string(v) : std::string();
    };
    LiveConfig cfg;
    cfg.endpoint = env("CHAT_ENDPOINT");
    cfg.model = env("CHAT_MODEL");
    cfg.api_key = env("CHAT_API_KEY");
    if (cfg.endpoint.empty() || cfg.model.empty()) return std::nullopt;
    return cfg;
}

LiveBackend::LiveBackend(LiveConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw Error(Errc::InvalidArgument, "live backend needs an endpoint");
    if (config_.max_retries < 0) config_.max_retries = 0;
    if (!config_.sleeper) {
        config_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

std::string LiveBackend::request_body(const PromptRequest& request) const {
    json messages = json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    for (const auto& m : request.history) messages.push_back({{"role", m.role}, {"content", m.content}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    json body = {{"model", config_.model}, {"messages", messages}, {"temperature", config_.temperature}};
    return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::chrono::milliseconds LiveBackend::backoff_delay(int attempt) const {
    if (attempt < 1) attempt = 1;
    return config_.backoff_base * (1LL << std::min(attempt - 1, 20));
}

std::string LiveBackend::send(const PromptRequest& request) {
    const auto url = detail::split_url(config_.endpoint);
    httplib::Client client(url.origin);
    detail::configure_client(client, config_.timeout);

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    for (const auto& [k, v] : config_.extra_headers) headers.emplace(k, v);

    const std::string body = request_body(request);
    Errc last_code = Errc::Transport;
    std::string last_message;

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) config_.sleeper(backoff_delay(attempt));

        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_code = Errc::Transport;
            last_message = "chat request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw Error(Errc::Auth, "chat endpoint rejected credentials (HTTP " +
                                        std::to_string(res->status) + ")");
        }
        if (res->status == 429) {
            last_code = Errc::RateLimited;
            last_message = "chat endpoint rate limited the request";
            continue;
        }
        if (res->status >= 500) {
            last_code = Errc::Transport;
            last_message = "chat endpoint returned HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw Error(Errc::BadResponse,
                        "chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            const auto doc = json::parse(res->body);
            const auto& content = doc.at("choices").at(0).at("message").at("content");
            if (!content.is_string()) throw Error(Errc::BadResponse, "chat response content is not text");
            return content.get<std::string>();
        } catch (const json::exception& e) {
            throw Error(Errc::BadResponse, std::string("unparseable chat response: ") + e.what());
        }
    }
    throw Error(last_code, last_message + " (after " + std::to_string(config_.max_retries) +
                               " retries)");
}

} // namespace taleboard

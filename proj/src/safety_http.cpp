#include "taleboard/evaluator.hpp"

#include "taleboard/error.hpp"
#include "http_util.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>

namespace taleboard {

using nlohmann::json;

namespace {

std::optional<SafetyEndpoint> endpoint_from_env(const char* url_var, const char* key_var) {
    const char* url = std::getenv(url_var);
    if (!url || !*url) return std::nullopt;
    const char* key = std::getenv(key_var);
    return SafetyEndpoint{url, key ? key : "", std::chrono::milliseconds(30000)};
}

json post_json(const SafetyEndpoint& ep, const std::string& path, const httplib::Headers& headers,
               const json& body, const char* provider) {
    const auto url = detail::split_url(ep.url);
    httplib::Client client(url.origin);
    detail::configure_client(client, ep.timeout);
    auto res = client.Post(path, headers, body.dump(-1, ' ', false, json::error_handler_t::replace),
                           "application/json");
    if (!res) {
        throw Error(Errc::Transport, std::string(provider) + " request failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw Error(Errc::Auth, std::string(provider) + " rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) throw Error(Errc::RateLimited, std::string(provider) + " rate limited the request");
    if (res->status < 200 || res->status >= 300) {
        throw Error(Errc::Transport, std::string(provider) + " returned HTTP " + std::to_string(res->status));
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(Errc::CategoryMappingError, std::string(provider) + " reply is not JSON: " + e.what());
    }
}

} // namespace

ModerationClient::ModerationClient(SafetyEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::optional<SafetyEndpoint> ModerationClient::from_env() {
    return endpoint_from_env("MODERATION_ENDPOINT", "MODERATION_KEY");
}

std::map<std::string, double> ModerationClient::score(const std::string& text) {
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    const json doc = post_json(endpoint_, detail::split_url(endpoint_.url).path, headers, {{"input", text}},
                               "moderation endpoint");
    try {
        std::map<std::string, double> out;
        for (const auto& [k, v] : doc.at("results").at(0).at("category_scores").items()) out[k] = v.get<double>();
        return out;
    } catch (const json::exception& e) {
        throw Error(Errc::CategoryMappingError, std::string("unexpected moderation reply: ") + e.what());
    }
}

PerspectiveClient::PerspectiveClient(SafetyEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::optional<SafetyEndpoint> PerspectiveClient::from_env() {
    return endpoint_from_env("PERSPECTIVE_ENDPOINT", "PERSPECTIVE_KEY");
}

std::map<std::string, double> PerspectiveClient::score(const std::string& text) {
    json attributes = json::object();
    for (const char* a : {"TOXICITY", "IDENTITY_ATTACK", "SEVERE_TOXICITY", "PROFANITY", "THREAT", "INSULT"}) {
        attributes[a] = json::object();
    }
    const json body = {{"comment", {{"text", text}}}, {"languages", {"en"}}, {"requestedAttributes", attributes}};
    std::string path = detail::split_url(endpoint_.url).path;
    if (!endpoint_.api_key.empty()) {
        path += (path.find('?') == std::string::npos ? "?key=" : "&key=") +
                httplib::detail::encode_query_param(endpoint_.api_key);
    }
    const json doc = post_json(endpoint_, path, {}, body, "perspective endpoint");
    try {
        std::map<std::string, double> out;
        for (const auto& [k, v] : doc.at("attributeScores").items()) {
            out[k] = v.at("summaryScore").at("value").get<double>();
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(Errc::CategoryMappingError, std::string("unexpected perspective reply: ") + e.what());
    }
}

} // namespace taleboard

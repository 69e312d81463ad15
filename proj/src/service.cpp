#include "taleboard/service.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

namespace taleboard {

using nlohmann::json;

namespace {

constexpr std::string_view kPrefix = "/api/v1";

ApiResponse reply(int status, const json& body) {
    return {status, body.dump(-1, ' ', false, json::error_handler_t::replace)};
}

ApiResponse api_error(int status, std::string_view code, const std::string& message,
                      std::optional<Pointer> pointer = std::nullopt) {
    return reply(status, {{"error",
                           {{"code", code},
                            {"message", message},
                            {"pointer", pointer ? json(pointer->name()) : json(nullptr)}}}});
}

json expects_json(const Expectation& e) {
    switch (e.kind) {
    case Expectation::Kind::Bootstrap: return {{"kind", "bootstrap"}};
    case Expectation::Kind::Scan: return {{"kind", "scan"}, {"element", element_type_name(e.element)}};
    case Expectation::Kind::Speech: return {{"kind", "speech"}};
    case Expectation::Kind::Terminal: return {{"kind", "terminal"}};
    }
    return {{"kind", "terminal"}};
}

json step_json(const StepOutcome& out) {
    return {{"id", out.session.id},
            {"pointer", out.session.pointer.name()},
            {"agent_utterance", out.agent_utterance},
            {"expects", expects_json(out.expects)}};
}

json parse_body(const std::string& body) {
    if (text::trim(body).empty()) return json::object();
    json doc = json::parse(body); // json::exception becomes bad_request in handle()
    if (!doc.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
    return doc;
}

std::string string_field(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_string()) {
        throw Error(Errc::InvalidArgument, std::string("\"") + key + "\" must be a string");
    }
    return doc.at(key).get<std::string>();
}

json story_json(const Session& s, const Story& story) {
    json parts = json::array();
    for (std::size_t i = 0; i < kStages.size(); ++i) {
        parts.push_back({{"stage", stage_name(kStages[i])}, {"page", board_page(kStages[i])}, {"text", story.parts[i]}});
    }
    return {{"id", s.id},
            {"title", s.saved_title ? json(*s.saved_title) : json(nullptr)},
            {"parts", parts},
            {"text", story.text()}};
}

} // namespace

StoryService::StoryService(DialogueManager dialogue, std::shared_ptr<ChatBackend> backend, Store& store,
                           BusyPolicy busy)
    : dialogue_(std::move(dialogue)), backend_(std::move(backend)), store_(store), busy_(busy) {
    if (!backend_) throw Error(Errc::InvalidArgument, "service needs a chat backend");
}

const std::vector<RouteInfo>& StoryService::routes() {
    static const std::vector<RouteInfo> table = {
        {"POST", "/api/v1/sessions", "Create a session and run the greeting step"},
        {"GET", "/api/v1/sessions/{id}", "Session snapshot"},
        {"POST", "/api/v1/sessions/{id}/scan", "Submit a scanned pawn or token"},
        {"POST", "/api/v1/sessions/{id}/speech", "Submit transcribed speech"},
        {"GET", "/api/v1/sessions/{id}/story", "Full story once finished"},
        {"POST", "/api/v1/sessions/{id}/save", "Save the finished story under a title"},
        {"GET", "/api/v1/catalog", "Element options per type"},
    };
    return table;
}

ApiResponse StoryService::handle(const std::string& method, const std::string& raw_path, const std::string& body) {
    std::string path = raw_path.substr(0, raw_path.find('?'));
    while (path.size() > 1 && path.back() == '/') path.pop_back();
    if (!text::starts_with(path, kPrefix)) return api_error(404, "not_found", "no route for " + path);
    const auto parts = text::split(path.substr(kPrefix.size()), '/');
    // parts[0] is the empty segment before the first '/'.
    std::vector<std::string> seg(parts.begin() + (parts.empty() ? 0 : 1), parts.end());

    try {
        if (seg.size() == 1 && seg[0] == "catalog") {
            if (method != "GET") return api_error(405, "bad_request", "use GET");
            return {200, dialogue_.catalog().to_json()};
        }
        if (seg.empty() || seg[0] != "sessions") return api_error(404, "not_found", "no route for " + path);
        if (seg.size() == 1) {
            if (method != "POST") return api_error(405, "bad_request", "use POST");
            return create(body);
        }
        const std::string& id = seg[1];
        if (seg.size() == 2) {
            if (method != "GET") return api_error(405, "bad_request", "use GET");
            return snapshot(id);
        }
        if (seg.size() == 3) {
            const std::string& action = seg[2];
            if (action == "story") {
                if (method != "GET") return api_error(405, "bad_request", "use GET");
                return story(id);
            }
            if (method != "POST") return api_error(405, "bad_request", "use POST");
            if (action == "scan") {
                const json doc = parse_body(body);
                const auto type = parse_element_type(text::trim(string_field(doc, "type")));
                if (!type) return api_error(400, "bad_request", "unknown element type");
                return advance(id, ScanEvent{*type, string_field(doc, "text")});
            }
            if (action == "speech") {
                const json doc = parse_body(body);
                return advance(id, SpeechEvent{string_field(doc, "text")});
            }
            if (action == "save") return save(id, body);
        }
        return api_error(404, "not_found", "no route for " + path);
    } catch (const json::exception& e) {
        return api_error(400, "bad_request", std::string("malformed JSON: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidArgument || e.code() == Errc::EmptyLessons) {
            return api_error(400, "bad_request", e.what());
        }
        if (e.code() == Errc::NotFound) return api_error(404, "not_found", e.what());
        return api_error(500, "internal", e.what());
    }
}

std::shared_ptr<StoryService::Slot> StoryService::find(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    if (!store_.has_session(id)) return nullptr;
    auto slot = std::make_shared<Slot>();
    slot->session = store_.load_session(id);
    sessions_.emplace(id, slot);
    return slot;
}

ApiResponse StoryService::create(const std::string& body) {
    const json doc = parse_body(body);
    if (!doc.contains("lessons") || !doc.at("lessons").is_array()) {
        return api_error(400, "bad_request", "\"lessons\" must be a list of strings");
    }
    const auto lessons = doc.at("lessons").get<std::vector<std::string>>();
    std::optional<std::int64_t> seed;
    if (doc.contains("seed") && !doc.at("seed").is_null()) seed = doc.at("seed").get<std::int64_t>();

    Session fresh = new_session(lessons, seed); // EmptyLessons -> 400
    StepOutcome out;
    try {
        out = dialogue_.step(fresh, Bootstrap{}, *backend_);
    } catch (const Error& e) {
        if (is_backend_error(e.code())) return api_error(502, "backend_error", e.what(), fresh.pointer);
        throw;
    }
    store_.save_session(out.session);
    auto slot = std::make_shared<Slot>();
    slot->session = out.session;
    {
        std::lock_guard lock(sessions_mutex_);
        sessions_[out.session.id] = slot;
    }
    return reply(201, step_json(out));
}

ApiResponse StoryService::advance(const std::string& id, const StepInput& input) {
    auto slot = find(id);
    if (!slot) return api_error(404, "not_found", "no session \"" + id + "\"");
    std::unique_lock lock(slot->mutex, std::defer_lock);
    if (busy_ == BusyPolicy::Reject) {
        if (!lock.try_lock()) return api_error(409, "busy", "another request for this session is running");
    } else {
        lock.lock();
    }
    try {
        StepOutcome out = dialogue_.step(slot->session, input, *backend_);
        store_.save_session(out.session);
        slot->session = out.session;
        return reply(200, step_json(out));
    } catch (const Error& e) {
        const Pointer at = slot->session.pointer;
        switch (e.code()) {
        case Errc::WrongInputKind: return api_error(409, "wrong_input_kind", e.what(), at);
        case Errc::InvalidOption: return api_error(409, "invalid_option", e.what(), at);
        default: break;
        }
        if (is_backend_error(e.code())) return api_error(502, "backend_error", e.what(), at);
        throw;
    }
}

ApiResponse StoryService::snapshot(const std::string& id) {
    auto slot = find(id);
    if (!slot) return api_error(404, "not_found", "no session \"" + id + "\"");
    std::lock_guard lock(slot->mutex);
    json doc = json::parse(session_to_json(slot->session));
    doc["expects"] = expects_json(expected_input(slot->session.pointer));
    return reply(200, doc);
}

ApiResponse StoryService::story(const std::string& id) {
    auto slot = find(id);
    if (!slot) return api_error(404, "not_found", "no session \"" + id + "\"");
    std::lock_guard lock(slot->mutex);
    if (slot->session.pointer < Pointer::finish()) {
        return api_error(409, "incomplete_story", "the story is not finished yet", slot->session.pointer);
    }
    return reply(200, story_json(slot->session, full_story(slot->session)));
}

ApiResponse StoryService::save(const std::string& id, const std::string& body) {
    const json doc = parse_body(body);
    const std::string title = text::trim(string_field(doc, "title"));
    if (title.empty()) return api_error(400, "bad_request", "title must not be empty");
    auto slot = find(id);
    if (!slot) return api_error(404, "not_found", "no session \"" + id + "\"");
    std::lock_guard lock(slot->mutex);
    try {
        const std::string story_id = store_.save_story(slot->session, title);
        Session updated = slot->session;
        updated.saved_title = title;
        store_.save_session(updated);
        slot->session = std::move(updated);
        return reply(201, {{"story_id", story_id}, {"title", title}, {"session_id", id}});
    } catch (const Error& e) {
        if (e.code() == Errc::IncompleteStory) {
            return api_error(409, "incomplete_story", e.what(), slot->session.pointer);
        }
        if (e.code() == Errc::DuplicateTitleForSession) {
            return api_error(409, "duplicate_title", e.what(), slot->session.pointer);
        }
        throw;
    }
}

} // namespace taleboard

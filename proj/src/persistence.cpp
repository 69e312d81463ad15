#include "taleboard/persistence.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace taleboard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json record_json(const ElementRecord& r) {
    return {{"option", r.option}, {"definition", r.definition}};
}

ElementRecord record_from(const json& j) {
    return {j.at("option").get<std::string>(), j.at("definition").get<std::string>()};
}

void check_version(const json& doc, std::string_view what) {
    if (!doc.is_object() || !doc.contains("schema_version")) {
        throw Error(Errc::ParseError, std::string(what) + " has no schema_version");
    }
    const auto& v = doc.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
        throw Error(Errc::SchemaVersionMismatch, std::string(what) + " has schema_version " + v.dump() +
                                                     ", expected " + std::to_string(kSchemaVersion));
    }
}

std::string dump(const json& j, int indent = 2) {
    try {
        return j.dump(indent);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("cannot serialize: ") + e.what());
    }
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool safe_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        if (!ok) return false;
    }
    return id != "." && id != "..";
}

json story_json(const SavedStory& s) {
    json rows = json::array();
    for (const auto& r : s.selections) {
        rows.push_back({{"stage", r.stage}, {"element", r.element}, {"selection", r.selection},
                        {"definition", r.definition}});
    }
    return {{"schema_version", kSchemaVersion},
            {"id", s.id},
            {"title", s.title},
            {"lessons", s.lessons},
            {"created_at", s.created_at},
            {"parts", s.parts},
            {"selections", rows},
            {"session_id", s.session_id}};
}

} // namespace

std::string session_to_json(const Session& s) {
    json characters = json::array();
    for (const auto& c : s.characters) characters.push_back(record_json(c));

    json stages = json::object();
    for (const auto& [stage, record] : s.stage_data) {
        json elements = json::object();
        for (const auto& [type, r] : record.elements) {
            elements[std::string(element_type_name(type))] = record_json(r);
        }
        stages[std::string(stage_name(stage))] = elements;
    }

    json parts = json::object();
    for (const auto& [stage, text] : s.story_parts) parts[std::string(stage_name(stage))] = text;

    json transcript = json::array();
    for (const auto& t : s.transcript) {
        transcript.push_back({{"role", std::string(speaker_name(t.role))},
                              {"text", t.text},
                              {"pointer", t.pointer.name()},
                              {"prompt", t.prompt},
                              {"note", t.note}});
    }

    json doc = {{"schema_version", kSchemaVersion},
                {"id", s.id},
                {"pointer", s.pointer.name()},
                {"lessons", s.lessons},
                {"characters", characters},
                {"stage_data", stages},
                {"story_parts", parts},
                {"transcript", transcript},
                {"seed", s.seed ? json(*s.seed) : json(nullptr)},
                {"saved_title", s.saved_title ? json(*s.saved_title) : json(nullptr)}};
    return dump(doc);
}

Session session_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("session is not valid JSON: ") + e.what());
    }
    check_version(doc, "session");

    auto pointer_of = [](const json& j) {
        const auto name = j.get<std::string>();
        auto p = Pointer::from_name(name);
        if (!p) throw Error(Errc::ParseError, "unknown pointer \"" + name + "\"");
        return *p;
    };
    auto stage_of = [](const std::string& name) {
        auto st = parse_stage_name(name);
        if (!st) throw Error(Errc::ParseError, "unknown stage \"" + name + "\"");
        return *st;
    };

    try {
        Session s;
        s.id = doc.at("id").get<std::string>();
        s.pointer = pointer_of(doc.at("pointer"));
        s.lessons = doc.at("lessons").get<std::vector<std::string>>();
        for (const auto& c : doc.at("characters")) s.characters.push_back(record_from(c));
        if (s.characters.size() > 3) throw Error(Errc::ParseError, "more than three characters");
        for (const auto& [stage, elements] : doc.at("stage_data").items()) {
            StageRecord record;
            for (const auto& [type, r] : elements.items()) {
                auto t = parse_element_type(type);
                if (!t || *t == ElementType::Character) {
                    throw Error(Errc::ParseError, "bad stage element \"" + type + "\"");
                }
                record.elements[*t] = record_from(r);
            }
            s.stage_data[stage_of(stage)] = std::move(record);
        }
        for (const auto& [stage, text] : doc.at("story_parts").items()) {
            s.story_parts[stage_of(stage)] = text.get<std::string>();
        }
        for (const auto& t : doc.at("transcript")) {
            TranscriptEntry e;
            const auto role = t.at("role").get<std::string>();
            if (role == speaker_name(Speaker::Child)) e.role = Speaker::Child;
            else if (role == speaker_name(Speaker::Tinker)) e.role = Speaker::Tinker;
            else throw Error(Errc::ParseError, "unknown role \"" + role + "\"");
            e.text = t.at("text").get<std::string>();
            e.pointer = pointer_of(t.at("pointer"));
            e.prompt = t.value("prompt", std::string());
            e.note = t.value("note", std::string());
            s.transcript.push_back(std::move(e));
        }
        if (const auto& seed = doc.at("seed"); !seed.is_null()) s.seed = seed.get<std::int64_t>();
        if (const auto& title = doc.at("saved_title"); !title.is_null()) {
            s.saved_title = title.get<std::string>();
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed session: ") + e.what());
    }
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::IoError, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error(Errc::IoError, "short write to " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(Errc::IoError, "cannot rename into " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Store::Store(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "sessions", ec);
    fs::create_directories(root_ / "stories", ec);
    if (!fs::is_directory(root_ / "sessions") || !fs::is_directory(root_ / "stories")) {
        throw Error(Errc::IoError, "cannot create store at " + root_.string());
    }
}

std::string Store::save_session(const Session& session) {
    if (!safe_id(session.id)) throw Error(Errc::InvalidArgument, "unusable session id \"" + session.id + "\"");
    const std::string body = session_to_json(session);
    std::lock_guard lock(mutex_);
    write_file_atomic(root_ / "sessions" / (session.id + ".json"), body);
    return session.id;
}

bool Store::has_session(const std::string& id) const {
    return safe_id(id) && fs::exists(root_ / "sessions" / (id + ".json"));
}

Session Store::load_session(const std::string& id) const {
    if (!has_session(id)) throw Error(Errc::NotFound, "no session \"" + id + "\"");
    std::string body;
    {
        std::lock_guard lock(mutex_);
        body = read_file(root_ / "sessions" / (id + ".json"));
    }
    return session_from_json(body);
}

std::vector<std::string> Store::session_ids() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
        if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<StoryIndexEntry> Store::story_index() const {
    std::vector<StoryIndexEntry> out;
    const auto path = root_ / "stories" / "index.jsonl";
    if (!fs::exists(path)) return out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            check_version(j, "story index entry");
            out.push_back({j.at("id").get<std::string>(), j.at("title").get<std::string>(),
                           j.at("session_id").get<std::string>(), j.at("created_at").get<std::string>()});
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, std::string("malformed story index: ") + e.what());
        }
    }
    return out;
}

std::string Store::save_story(const Session& session, const std::string& title) {
    const std::string clean_title = text::trim(title);
    if (clean_title.empty()) throw Error(Errc::InvalidArgument, "story title must not be empty");
    if (session.pointer < Pointer::finish()) {
        throw Error(Errc::IncompleteStory, "session is at " + session.pointer.name() + ", story is not finished");
    }
    Story story;
    try {
        story = full_story(session);
    } catch (const Error& e) {
        throw Error(Errc::IncompleteStory, e.what());
    }

    std::lock_guard lock(mutex_);
    const auto index = story_index();
    for (const auto& e : index) {
        if (e.session_id != session.id) continue;
        if (e.title == clean_title) return e.id;
        throw Error(Errc::DuplicateTitleForSession,
                    "session " + session.id + " was already saved as \"" + e.title + "\"");
    }

    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "story-%04zu", index.size() + 1);
    SavedStory saved{id_buf,  clean_title, session.lessons,          utc_now(),
                     story.parts, selections_table(session), session.id};

    write_file_atomic(root_ / "stories" / (saved.id + ".json"), dump(story_json(saved)));
    write_file_atomic(root_ / "stories" / (saved.id + ".txt"), render_story_text(saved));

    // The index only learns about a story once both payload files exist.
    const json entry = {{"schema_version", kSchemaVersion}, {"id", saved.id}, {"title", saved.title},
                        {"session_id", saved.session_id}, {"created_at", saved.created_at}};
    std::ofstream out(root_ / "stories" / "index.jsonl", std::ios::app | std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot append to story index");
    out << dump(entry, -1) << '\n';
    out.flush();
    if (!out) throw Error(Errc::IoError, "cannot append to story index");
    return saved.id;
}

SavedStory Store::load_story(const std::string& id) const {
    const auto path = root_ / "stories" / (id + ".json");
    if (!safe_id(id) || !fs::exists(path)) throw Error(Errc::NotFound, "no story \"" + id + "\"");
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("story is not valid JSON: ") + e.what());
    }
    check_version(doc, "story");
    try {
        SavedStory s;
        s.id = doc.at("id").get<std::string>();
        s.title = doc.at("title").get<std::string>();
        s.lessons = doc.at("lessons").get<std::vector<std::string>>();
        s.created_at = doc.at("created_at").get<std::string>();
        s.parts = doc.at("parts").get<std::array<std::string, 4>>();
        for (const auto& r : doc.at("selections")) {
            s.selections.push_back({r.at("stage").get<std::string>(), r.at("element").get<std::string>(),
                                    r.at("selection").get<std::string>(),
                                    r.at("definition").get<std::string>()});
        }
        s.session_id = doc.at("session_id").get<std::string>();
        return s;
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed story: ") + e.what());
    }
}

std::string render_story_text(const SavedStory& story) {
    std::string out = story.title + "\n";
    for (std::size_t i = 0; i < kStages.size(); ++i) {
        out += "\n[" + std::string(board_page(kStages[i])) + "]\n" + story.parts[i] + "\n";
    }
    return out;
}

} // namespace taleboard

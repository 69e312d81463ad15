#include "taleboard/prompts.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace taleboard {

using nlohmann::json;

std::string_view provenance_name(Provenance provenance) {
    return provenance == Provenance::Verbatim ? "verbatim" : "inferred";
}

std::string system_prompt_tinker() {
    return "You are a friendly intelligent agent named Tinker Tales, helping a child aged 4-6 with "
           "story generation using a game board. Use simple words and sentence structures, keeping "
           "in mind that the listener is a child aged 4-6.";
}

namespace {

constexpr std::array<std::string_view, 4> kPlaceholders = {kNfcWrittenText, kSpeechToText,
                                                           kLessons, kStorySoFar};

// Returns the placeholder starting at `pos`, or an empty view.
std::string_view placeholder_at(std::string_view body, std::size_t pos) {
    for (auto token : kPlaceholders) {
        if (body.substr(pos, token.size()) == token) return token;
    }
    return {};
}

void check_placeholders(const std::string& name, std::string_view body) {
    std::size_t pos = 0;
    while ((pos = body.find("${", pos)) != std::string_view::npos) {
        auto token = placeholder_at(body, pos);
        if (token.empty()) {
            const auto end = body.find('}', pos);
            throw Error(Errc::ParseError, "template " + name + " uses unknown placeholder " +
                                              std::string(body.substr(pos, end == std::string_view::npos
                                                                                ? 12
                                                                                : end - pos + 1)));
        }
        pos += token.size();
    }
}

bool consumes_input(Pointer p) { return !p.is_done(); }

std::string lower_first_word(std::string s) { return text::to_lower(s); }

void add_label_fact(std::map<std::string, std::string>& facts, const std::string& key,
                    const std::string& value) {
    facts[key] = value;
    facts[key + "_lower"] = lower_first_word(value);
}

std::map<std::string, std::string> build_facts(Pointer pointer, const Session& session,
                                               const StepInput& input) {
    std::map<std::string, std::string> facts;
    facts["pointer"] = pointer.name();
    if (auto stage = pointer.stage()) {
        add_label_fact(facts, "stage", std::string(stage_name(*stage)));
        add_label_fact(facts, "page", std::string(board_page(*stage)));
        auto it = session.stage_data.find(*stage);
        if (it != session.stage_data.end()) {
            for (const auto& [type, rec] : it->second.elements) {
                add_label_fact(facts, std::string(element_type_name(type)), rec.option);
            }
        }
    }
    for (std::size_t i = 0; i < session.characters.size(); ++i) {
        const auto& c = session.characters[i];
        const std::string k = std::to_string(i + 1);
        add_label_fact(facts, "character" + k, c.option);
        const auto name = text::given_name(c.definition);
        facts["name" + k] = name.value_or("");
        facts["hero" + k] = name ? *name + " the " + text::to_lower(c.option)
                                 : "the " + text::to_lower(c.option);
    }
    if (const auto* scan = std::get_if<ScanEvent>(&input)) {
        add_label_fact(facts, "input", scan->text);
    } else if (const auto* speech = std::get_if<SpeechEvent>(&input)) {
        facts["input"] = speech->text;
    }
    facts["lessons"] = text::join(session.lessons, ", ");
    facts["story"] = story_so_far(session);
    return facts;
}

} // namespace

PromptCatalog PromptCatalog::from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("templates: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_object()) {
        throw Error(Errc::ParseError, "templates: expected an object with a \"templates\" map");
    }
    if (doc.value("schema_version", 1) != 1) {
        throw Error(Errc::SchemaVersionMismatch, "templates: unsupported schema_version");
    }
    PromptCatalog catalog;
    catalog.system_ = doc.value("system", system_prompt_tinker());
    catalog.delimiter_ = doc.value("story_delimiter", std::string("---"));
    if (text::trim(catalog.delimiter_).empty()) {
        throw Error(Errc::ParseError, "templates: story_delimiter is empty");
    }

    std::map<Pointer, PromptTemplate> by_pointer;
    for (const auto& [name, entry] : doc["templates"].items()) {
        auto pointer = Pointer::from_name(name);
        if (!pointer || !consumes_input(*pointer)) {
            throw Error(Errc::ParseError, "templates: no input-consuming pointer named " + name);
        }
        if (!entry.is_object() || !entry.contains("body") || !entry["body"].is_string()) {
            throw Error(Errc::ParseError, "templates: " + name + " lacks a string body");
        }
        PromptTemplate t;
        t.pointer = *pointer;
        t.body = entry["body"].get<std::string>();
        if (text::trim(t.body).empty()) {
            throw Error(Errc::ParseError, "templates: " + name + " has an empty body");
        }
        check_placeholders(name, t.body);
        const std::string prov = entry.value("provenance", std::string("inferred"));
        if (prov == "verbatim") t.provenance = Provenance::Verbatim;
        else if (prov == "inferred") t.provenance = Provenance::Inferred;
        else throw Error(Errc::ParseError, "templates: " + name + " has provenance " + prov);
        by_pointer.emplace(*pointer, std::move(t));
    }
    for (auto p : all_pointers()) {
        if (!consumes_input(p)) continue;
        auto it = by_pointer.find(p);
        if (it == by_pointer.end()) {
            throw Error(Errc::MissingTemplate, "templates: missing template for " + p.name());
        }
        catalog.templates_.push_back(std::move(it->second));
    }
    return catalog;
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open templates " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

bool PromptCatalog::contains(Pointer pointer) const {
    return std::any_of(templates_.begin(), templates_.end(),
                       [&](const PromptTemplate& t) { return t.pointer == pointer; });
}

const PromptTemplate& PromptCatalog::at(Pointer pointer) const {
    for (const auto& t : templates_) {
        if (t.pointer == pointer) return t;
    }
    throw Error(Errc::MissingTemplate, "no template for " + pointer.name());
}

PromptRequest PromptCatalog::render(Pointer pointer, const Session& session,
                                    const StepInput& input) const {
    const PromptTemplate& tmpl = at(pointer);
    const std::string_view body = tmpl.body;

    auto missing = [&](std::string_view what) {
        return Error(Errc::MissingPlaceholderData,
                     pointer.name() + ": no data for " + std::string(what));
    };

    // Single pass, so substituted values are never expanded again.
    std::string user;
    user.reserve(body.size() + 256);
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto next = body.find("${", pos);
        if (next == std::string_view::npos) {
            user.append(body.substr(pos));
            break;
        }
        user.append(body.substr(pos, next - pos));
        const auto token = placeholder_at(body, next);
        if (token == kNfcWrittenText) {
            const auto* scan = std::get_if<ScanEvent>(&input);
            if (!scan) throw missing(token);
            user += scan->text;
        } else if (token == kSpeechToText) {
            const auto* speech = std::get_if<SpeechEvent>(&input);
            if (!speech) throw missing(token);
            user += speech->text;
        } else if (token == kLessons) {
            if (session.lessons.empty()) throw missing(token);
            user += text::join(session.lessons, ", ");
        } else if (token == kStorySoFar) {
            user += story_so_far(session);
        } else {
            throw missing(body.substr(next, 2));
        }
        pos = next + token.size();
    }

    PromptRequest request;
    request.system = system_;
    request.user = std::move(user);
    request.history = conversation_history(session);
    request.tag = pointer.name();
    request.facts = build_facts(pointer, session, input);
    return request;
}

const PromptCatalog& default_prompt_catalog() {
    static const PromptCatalog catalog = PromptCatalog::from_json(default_templates_json());
    return catalog;
}

StoryPart split_story_part(std::string_view response, std::string_view delimiter) {
    const std::string delim = text::trim(delimiter);
    std::size_t line_start = 0;
    while (line_start <= response.size()) {
        auto line_end = response.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = response.size();
        if (text::trim(response.substr(line_start, line_end - line_start)) == delim) {
            return {text::trim(response.substr(0, line_start)),
                    text::trim(line_end < response.size() ? response.substr(line_end + 1)
                                                          : std::string_view{})};
        }
        if (line_end == response.size()) break;
        line_start = line_end + 1;
    }
    return {text::trim(response), ""};
}

std::vector<ChatMessage> conversation_history(const Session& session) {
    std::vector<ChatMessage> history;
    for (const auto& entry : session.transcript) {
        if (entry.role != Speaker::Tinker) continue;
        history.push_back({"user", entry.prompt});
        history.push_back({"assistant", entry.text});
    }
    return history;
}

} // namespace taleboard

#include "taleboard/catalog.hpp"

#include "taleboard/error.hpp"
#include "taleboard/gateway.hpp"
#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace taleboard {

using nlohmann::json;

std::string_view element_type_name(ElementType type) {
    switch (type) {
    case ElementType::Character: return "character";
    case ElementType::Place: return "place";
    case ElementType::Item: return "item";
    case ElementType::Emotion: return "emotion";
    }
    return "character";
}

std::optional<ElementType> parse_element_type(std::string_view name) {
    for (auto type : kElementTypes) {
        if (text::iequals(name, element_type_name(type))) return type;
    }
    return std::nullopt;
}

ElementCatalog::ElementCatalog(std::map<ElementType, std::vector<std::string>> options)
    : options_(std::move(options)) {
    for (auto type : kElementTypes) {
        auto it = options_.find(type);
        if (it == options_.end() || it->second.empty()) {
            throw Error(Errc::InvalidArgument,
                        "catalog has no options for " + std::string(element_type_name(type)));
        }
        std::set<std::string> seen;
        for (auto& label : it->second) {
            label = text::trim(label);
            if (label.empty()) {
                throw Error(Errc::InvalidArgument, "catalog contains an empty label");
            }
            if (!seen.insert(text::to_lower(label)).second) {
                throw Error(Errc::InvalidArgument, "duplicate catalog label: " + label);
            }
        }
    }
}

const std::vector<std::string>& ElementCatalog::options(ElementType type) const {
    return options_.at(type);
}

std::optional<std::string> ElementCatalog::validate_option(ElementType type,
                                                           std::string_view text) const {
    const std::string wanted = text::trim(text);
    if (wanted.empty()) return std::nullopt;
    for (const auto& label : options(type)) {
        if (text::iequals(label, wanted)) return label;
    }
    return std::nullopt;
}

std::string ElementCatalog::to_json() const {
    json doc = json::object();
    for (auto type : kElementTypes) doc[std::string(element_type_name(type))] = options(type);
    return doc.dump(2);
}

ElementCatalog ElementCatalog::from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("catalog: ") + e.what());
    }
    if (!doc.is_object()) throw Error(Errc::ParseError, "catalog: expected a JSON object");
    std::map<ElementType, std::vector<std::string>> options;
    for (auto type : kElementTypes) {
        const std::string key(element_type_name(type));
        if (!doc.contains(key) || !doc[key].is_array()) {
            throw Error(Errc::ParseError, "catalog: missing list \"" + key + "\"");
        }
        for (const auto& v : doc[key]) {
            if (!v.is_string()) throw Error(Errc::ParseError, "catalog: labels must be strings");
            options[type].push_back(v.get<std::string>());
        }
    }
    return ElementCatalog(std::move(options));
}

ElementCatalog ElementCatalog::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open catalog " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

const ElementCatalog& default_catalog() {
    static const ElementCatalog catalog({
        {ElementType::Character,
         {"Prince", "Princess", "Girl", "Boy", "Nanny", "Knight", "Sheriff", "Giant", "Troll",
          "Dwarf", "Mermaid", "Fairy", "Angel", "Lion", "Butterfly", "Duck", "Frog", "Lizard",
          "Dog", "Bear", "Rabbit"}},
        {ElementType::Place,
         {"Forest", "Island", "Cave", "Castle", "Garden", "River", "Street", "Theatre", "Bridge",
          "Harbour", "Hut", "Market", "Mountain", "Temple"}},
        {ElementType::Item,
         {"Wand", "Ruby", "Matches", "Sword", "Flower", "Fire", "Ring", "Lantern", "Coins",
          "Boots", "Cake", "Violin", "Harp", "Thorn", "Book", "Ladder", "Stick", "Clock", "Apple",
          "Doll", "Hat", "Shoes", "Ship", "Crown"}},
        {ElementType::Emotion,
         {"Happy", "Sad", "Lonely", "Loving", "Joyful", "Painful", "Passionate", "Regretful",
          "Angry", "Proud", "Anxious", "Disappointed", "Suspicious", "Satisfied", "Embarrassed",
          "Hopeful", "Fearful", "Curious", "Comfortable", "Reflective", "Surprised", "Scared",
          "Thankful"}},
    });
    return catalog;
}

std::optional<std::string> validate_option(const ElementCatalog& catalog, ElementType type,
                                           std::string_view text) {
    return catalog.validate_option(type, text);
}

const std::vector<std::string>& ExtractionResult::of(ElementType type) const {
    switch (type) {
    case ElementType::Character: return characters;
    case ElementType::Place: return places;
    case ElementType::Item: return items;
    case ElementType::Emotion: return emotions;
    }
    return characters;
}

namespace {

constexpr std::string_view kExtractionPrompt =
    "Given a children's story, please extract as many characters, places, items and emotions "
    "as possible from the story. Characters, places, and items should be general terms "
    "consisting of a single word and should be simple and easy for children to understand. "
    "Also, summarize the lesson of the story in one short sentence.\n\n"
    "Story = {{STORY}}";

constexpr std::string_view kExtractionFormat =
    "Answer with exactly five lines and nothing else:\n"
    "Characters: <comma-separated single words>\n"
    "Places: <comma-separated single words>\n"
    "Items: <comma-separated single words>\n"
    "Emotions: <comma-separated single words>\n"
    "Lesson: <one short sentence>";

std::string strip_label(std::string_view raw) {
    std::string label = text::trim(raw);
    auto strip_char = [](char c) {
        return c == '.' || c == '"' || c == '\'' || c == '*' || c == '-' || c == '[' || c == ']';
    };
    while (!label.empty() && strip_char(label.back())) label.pop_back();
    while (!label.empty() && strip_char(label.front())) label.erase(label.begin());
    return text::trim(label);
}

} // namespace

std::string extraction_prompt(std::string_view story_text) {
    std::string prompt(kExtractionPrompt);
    text::replace_all(prompt, "{{STORY}}", story_text);
    return prompt;
}

ExtractionResult parse_extraction(std::string_view response) {
    ExtractionResult result;
    std::map<std::string, bool> seen;
    for (const auto& raw_line : text::split(response, '\n')) {
        const std::string line = text::trim(raw_line);
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        const std::string key = text::to_lower(strip_label(line.substr(0, colon)));
        const std::string value = text::trim(line.substr(colon + 1));

        std::vector<std::string>* target = nullptr;
        if (key == "characters") target = &result.characters;
        else if (key == "places") target = &result.places;
        else if (key == "items") target = &result.items;
        else if (key == "emotions") target = &result.emotions;
        else if (key == "lesson") {
            result.lesson = value;
            while (!result.lesson.empty() && (result.lesson.back() == '*' || result.lesson.back() == '"')) {
                result.lesson.pop_back();
            }
            seen[key] = true;
            continue;
        } else {
            continue;
        }
        seen[key] = true;
        for (const auto& piece : text::split(value, ',')) {
            const std::string label = strip_label(piece);
            if (label.empty()) continue;
            if (label.find_first_of(" \t") != std::string::npos) {
                result.warnings.push_back("dropped multi-word " + key + " label \"" + label + "\"");
                continue;
            }
            target->push_back(label);
        }
    }
    for (const char* key : {"characters", "places", "items", "emotions", "lesson"}) {
        if (!seen.count(key)) {
            throw Error(Errc::ParseError, std::string("extraction response lacks a \"") + key +
                                              "\" line");
        }
    }
    return result;
}

ExtractionResult extract_elements(std::string_view story_text, ChatBackend& backend,
                                  ExchangeLog* log) {
    if (text::trim(story_text).empty()) {
        throw Error(Errc::InvalidArgument, "extract_elements: story text is empty");
    }
    PromptRequest request;
    request.system = std::string(kExtractionFormat);
    request.user = extraction_prompt(story_text);
    request.tag = "Extract";
    return parse_extraction(complete(backend, request, log));
}

std::map<ElementType, std::vector<std::string>> merge_extractions(
    const std::vector<ExtractionResult>& results) {
    std::map<ElementType, std::vector<std::string>> merged;
    for (auto type : kElementTypes) {
        std::set<std::string> seen;
        auto& out = merged[type];
        for (const auto& r : results) {
            for (const auto& label : r.of(type)) {
                if (seen.insert(text::to_lower(label)).second) out.push_back(label);
            }
        }
    }
    return merged;
}

} // namespace taleboard

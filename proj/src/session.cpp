#include "taleboard/session.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

#include <random>

namespace taleboard {

std::string describe(const StepInput& input) {
    return std::visit(
        [](const auto& e) -> std::string {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, Bootstrap>) {
                return "bootstrap";
            } else if constexpr (std::is_same_v<T, ScanEvent>) {
                return "scan(" + std::string(element_type_name(e.type)) + ", \"" + e.text + "\")";
            } else {
                return "speech(\"" + e.text + "\")";
            }
        },
        input);
}

std::string_view speaker_name(Speaker speaker) {
    return speaker == Speaker::Child ? "child" : "tinker";
}

std::string random_session_id() {
    std::random_device rd;
    std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    static constexpr char hex[] = "0123456789abcdef";
    std::string id = "s-";
    auto v = rng();
    for (int i = 0; i < 16; ++i) {
        id += hex[v & 0xF];
        v >>= 4;
    }
    return id;
}

Session new_session(std::vector<std::string> lessons, std::optional<std::int64_t> seed,
                    std::string id) {
    std::vector<std::string> cleaned;
    for (auto& l : lessons) {
        auto t = text::trim(l);
        if (!t.empty()) cleaned.push_back(std::move(t));
    }
    if (cleaned.empty()) throw Error(Errc::EmptyLessons, "at least one lesson is required");
    Session s;
    s.id = id.empty() ? random_session_id() : std::move(id);
    s.lessons = std::move(cleaned);
    s.seed = seed;
    return s;
}

std::string story_so_far(const Session& session) {
    std::vector<std::string> parts;
    for (auto stage : kStages) {
        auto it = session.story_parts.find(stage);
        if (it != session.story_parts.end() && !it->second.empty()) parts.push_back(it->second);
    }
    return text::join(parts, "\n\n");
}

std::string Story::text() const {
    return text::join(std::vector<std::string>(parts.begin(), parts.end()), "\n\n");
}

Story full_story(const Session& session) {
    if (session.pointer < Pointer::finish()) {
        throw Error(Errc::Incomplete, "story is not finished (pointer " + session.pointer.name() + ")");
    }
    Story story;
    for (std::size_t i = 0; i < kStages.size(); ++i) {
        auto it = session.story_parts.find(kStages[i]);
        if (it == session.story_parts.end() || it->second.empty()) {
            throw Error(Errc::Incomplete,
                        "missing story part for " + std::string(stage_name(kStages[i])));
        }
        story.parts[i] = it->second;
    }
    return story;
}

std::vector<SelectionRow> selections_table(const Session& session) {
    static constexpr std::array<const char*, 3> ordinals = {"First", "Second", "Third"};
    std::vector<SelectionRow> rows;
    for (std::size_t i = 0; i < session.characters.size() && i < ordinals.size(); ++i) {
        const auto& c = session.characters[i];
        rows.push_back({"Character", ordinals[i], c.option, c.definition});
    }
    for (auto stage : kStages) {
        auto it = session.stage_data.find(stage);
        if (it == session.stage_data.end()) continue;
        for (auto type : {ElementType::Place, ElementType::Item, ElementType::Emotion}) {
            auto e = it->second.elements.find(type);
            if (e == it->second.elements.end()) continue;
            std::string element(element_type_name(type));
            element[0] = static_cast<char>(element[0] - 'a' + 'A');
            rows.push_back({std::string(board_page(stage)), element, e->second.option,
                            e->second.definition});
        }
    }
    return rows;
}

std::optional<std::string> check_invariants(const Session& s) {
    if (s.lessons.empty()) return "no lessons";
    if (s.characters.size() > 3) return "more than three characters";
    for (int k = 1; k <= 3; ++k) {
        if (s.pointer >= Pointer::character(k, Phase::CharacterDefine)) {
            if (static_cast<int>(s.characters.size()) < k || s.characters[k - 1].option.empty()) {
                return "character " + std::to_string(k) + " missing at " + s.pointer.name();
            }
        }
    }
    for (auto stage : kStages) {
        for (auto type : {ElementType::Place, ElementType::Item, ElementType::Emotion}) {
            if (s.pointer >= Pointer::stage(stage, Phase::ElementDefine, type)) {
                auto it = s.stage_data.find(stage);
                if (it == s.stage_data.end() || !it->second.elements.count(type) ||
                    it->second.elements.at(type).option.empty()) {
                    return std::string(stage_name(stage)) + " " +
                           std::string(element_type_name(type)) + " missing at " + s.pointer.name();
                }
            }
        }
        // The part is generated while consuming input at S:Complete, so it must
        // exist once the pointer has moved past that state.
        const bool past_complete = s.pointer > Pointer::stage(stage, Phase::Complete);
        auto part = s.story_parts.find(stage);
        const bool has_part = part != s.story_parts.end() && !part->second.empty();
        if (past_complete != has_part) {
            return "story part for " + std::string(stage_name(stage)) +
                   (has_part ? " present early" : " missing") + " at " + s.pointer.name();
        }
    }
    for (const auto& entry : s.transcript) {
        if (entry.pointer >= s.pointer) return "transcript entry from a future pointer";
    }
    return std::nullopt;
}

} // namespace taleboard

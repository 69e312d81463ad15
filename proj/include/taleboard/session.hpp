#pragma once

#include "taleboard/catalog.hpp"
#include "taleboard/pointer.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace taleboard {

// A scanned pawn or token: element type plus the label written on its chip.
struct ScanEvent {
    ElementType type = ElementType::Character;
    std::string text;

    friend bool operator==(const ScanEvent&, const ScanEvent&) = default;
};

// Transcribed speech. Empty text stands for a failed capture.
struct SpeechEvent {
    std::string text;

    friend bool operator==(const SpeechEvent&, const SpeechEvent&) = default;
};

// Starts the conversation at Initiate.
struct Bootstrap {
    friend bool operator==(const Bootstrap&, const Bootstrap&) = default;
};

using InputEvent = std::variant<ScanEvent, SpeechEvent>;
using StepInput = std::variant<Bootstrap, ScanEvent, SpeechEvent>;

std::string describe(const StepInput& input);

struct ElementRecord {
    std::string option;
    std::string definition;

    friend bool operator==(const ElementRecord&, const ElementRecord&) = default;
};

struct StageRecord {
    std::map<ElementType, ElementRecord> elements; // place, item, emotion

    friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

enum class Speaker { Child, Tinker };

std::string_view speaker_name(Speaker speaker);

struct TranscriptEntry {
    Speaker role = Speaker::Child;
    std::string text;
    Pointer pointer;
    // Tinker entries keep the user prompt that produced them so the
    // conversation can be replayed to a chat backend.
    std::string prompt;
    // Non-empty when the engine flagged something about this turn.
    std::string note;

    friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

struct Session {
    std::string id;
    Pointer pointer = Pointer::initiate();
    std::vector<std::string> lessons;
    std::vector<ElementRecord> characters; // at most 3
    std::map<StageName, StageRecord> stage_data;
    std::map<StageName, std::string> story_parts;
    std::vector<TranscriptEntry> transcript; // append-only
    std::optional<std::int64_t> seed;
    std::optional<std::string> saved_title;

    friend bool operator==(const Session&, const Session&) = default;
};

// Throws Error(EmptyLessons) when `lessons` is empty. An empty `id` gets a
// random identifier.
Session new_session(std::vector<std::string> lessons, std::optional<std::int64_t> seed = {},
                    std::string id = {});

std::string random_session_id();

// Completed story parts in stage order, separated by blank lines.
std::string story_so_far(const Session& session);

struct Story {
    std::array<std::string, 4> parts; // Introduction, Development, Crisis, Conclusion

    std::string text() const;
    friend bool operator==(const Story&, const Story&) = default;
};

// Throws Error(Incomplete) before Finish.
Story full_story(const Session& session);

// One row of the selection table: stage is "Character" or a board page,
// element is First/Second/Third or Place/Item/Emotion.
struct SelectionRow {
    std::string stage;
    std::string element;
    std::string selection;
    std::string definition;

    friend bool operator==(const SelectionRow&, const SelectionRow&) = default;
};

// Rows for every recorded selection, characters first, then stages in order.
std::vector<SelectionRow> selections_table(const Session& session);

// Structural invariants of a session; returns a description of the first
// violation or nullopt.
std::optional<std::string> check_invariants(const Session& session);

} // namespace taleboard

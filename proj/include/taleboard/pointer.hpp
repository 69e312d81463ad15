#pragma once

#include "taleboard/catalog.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace taleboard {

enum class StageName { Introduction, Development, Crisis, Conclusion };

inline constexpr std::array<StageName, 4> kStages = {
    StageName::Introduction, StageName::Development, StageName::Crisis, StageName::Conclusion};

std::string_view stage_name(StageName stage);
std::optional<StageName> parse_stage_name(std::string_view name);

// Board page for a story stage: Start, Journey, Climax, End.
std::string_view board_page(StageName stage);
std::optional<StageName> stage_from_board_page(std::string_view page);

enum class Phase {
    Initiate,
    CharacterSelect,
    CharacterDefine,
    Ready,
    Start,
    ElementSelect,
    ElementDefine,
    Complete,
    Finish,
    Replay,
    Done,
};

// One state of the dialogue state machine. States are totally ordered; the
// canonical sequence is
//   Initiate, Character:k:{Select,Define} for k = 1..3,
//   for each stage S: S:Ready, S:Start, S:{Place,Item,Emotion}:{Select,Define}, S:Complete,
//   Finish, Replay, Done.
class Pointer {
public:
    static constexpr std::size_t kCount = 46;

    constexpr Pointer() = default;

    static constexpr Pointer initiate() { return Pointer(0); }
    static constexpr Pointer done() { return Pointer(kCount - 1); }
    static Pointer character(int k, Phase phase);
    static Pointer stage(StageName stage, Phase phase,
                         std::optional<ElementType> element = std::nullopt);
    static Pointer finish();
    static Pointer replay();

    // Parses the colon-joined canonical name, e.g. "Introduction:Place:Select".
    static std::optional<Pointer> from_name(std::string_view name);
    static std::optional<Pointer> from_ordinal(std::size_t ordinal);

    std::size_t ordinal() const { return ordinal_; }
    std::string name() const;

    Phase phase() const;
    // Set for stage-scoped pointers (Ready..Complete).
    std::optional<StageName> stage() const;
    // Set for Character:k:* pointers (1-based).
    std::optional<int> character_index() const;
    // Set for Character:*:* (Character) and S:<Element>:* pointers.
    std::optional<ElementType> element() const;

    bool is_done() const { return ordinal_ == kCount - 1; }
    // Precondition: !is_done().
    Pointer next() const;

    friend constexpr auto operator<=>(Pointer, Pointer) = default;

private:
    explicit constexpr Pointer(std::size_t ordinal) : ordinal_(static_cast<std::uint8_t>(ordinal)) {}

    std::uint8_t ordinal_ = 0;
};

// Every pointer in canonical order.
std::span<const Pointer> all_pointers();

// What the state machine waits for at a pointer.
struct Expectation {
    enum class Kind { Bootstrap, Scan, Speech, Terminal };

    Kind kind = Kind::Terminal;
    ElementType element = ElementType::Character; // meaningful for Scan only

    static Expectation bootstrap() { return {Kind::Bootstrap}; }
    static Expectation scan(ElementType type) { return {Kind::Scan, type}; }
    static Expectation speech() { return {Kind::Speech}; }
    static Expectation terminal() { return {Kind::Terminal}; }

    friend bool operator==(const Expectation& a, const Expectation& b) {
        return a.kind == b.kind && (a.kind != Kind::Scan || a.element == b.element);
    }
};

// Select states expect a scan of their element type, Initiate a bootstrap,
// Done nothing, and every other state speech.
Expectation expected_input(Pointer pointer);

std::string describe(const Expectation& expectation);

} // namespace taleboard

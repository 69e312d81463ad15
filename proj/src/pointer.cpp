#include "taleboard/pointer.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

#include <vector>

namespace taleboard {

namespace {

struct PointerInfo {
    Phase phase;
    std::optional<StageName> stage;
    std::optional<int> character;
    std::optional<ElementType> element;
    std::string name;
};

const std::vector<PointerInfo>& table() {
    static const std::vector<PointerInfo> infos = [] {
        std::vector<PointerInfo> v;
        v.push_back({Phase::Initiate, {}, {}, {}, "Initiate"});
        for (int k = 1; k <= 3; ++k) {
            const std::string prefix = "Character:" + std::to_string(k) + ":";
            v.push_back({Phase::CharacterSelect, {}, k, ElementType::Character, prefix + "Select"});
            v.push_back({Phase::CharacterDefine, {}, k, ElementType::Character, prefix + "Define"});
        }
        for (auto stage : kStages) {
            const std::string s(stage_name(stage));
            v.push_back({Phase::Ready, stage, {}, {}, s + ":Ready"});
            v.push_back({Phase::Start, stage, {}, {}, s + ":Start"});
            for (auto type : {ElementType::Place, ElementType::Item, ElementType::Emotion}) {
                std::string el(element_type_name(type));
                el[0] = static_cast<char>(el[0] - 'a' + 'A');
                v.push_back({Phase::ElementSelect, stage, {}, type, s + ":" + el + ":Select"});
                v.push_back({Phase::ElementDefine, stage, {}, type, s + ":" + el + ":Define"});
            }
            v.push_back({Phase::Complete, stage, {}, {}, s + ":Complete"});
        }
        v.push_back({Phase::Finish, {}, {}, {}, "Finish"});
        v.push_back({Phase::Replay, {}, {}, {}, "Replay"});
        v.push_back({Phase::Done, {}, {}, {}, "Done"});
        return v;
    }();
    return infos;
}

const PointerInfo& info(Pointer p) { return table().at(p.ordinal()); }

} // namespace

std::string_view stage_name(StageName stage) {
    switch (stage) {
    case StageName::Introduction: return "Introduction";
    case StageName::Development: return "Development";
    case StageName::Crisis: return "Crisis";
    case StageName::Conclusion: return "Conclusion";
    }
    return "Introduction";
}

std::optional<StageName> parse_stage_name(std::string_view name) {
    for (auto s : kStages) {
        if (stage_name(s) == name) return s;
    }
    return std::nullopt;
}

std::string_view board_page(StageName stage) {
    switch (stage) {
    case StageName::Introduction: return "Start";
    case StageName::Development: return "Journey";
    case StageName::Crisis: return "Climax";
    case StageName::Conclusion: return "End";
    }
    return "Start";
}

std::optional<StageName> stage_from_board_page(std::string_view page) {
    for (auto s : kStages) {
        if (board_page(s) == page) return s;
    }
    return std::nullopt;
}

Pointer Pointer::character(int k, Phase phase) {
    if (k < 1 || k > 3 || (phase != Phase::CharacterSelect && phase != Phase::CharacterDefine)) {
        throw Error(Errc::InvalidArgument, "no such character pointer");
    }
    return Pointer(1 + 2 * static_cast<std::size_t>(k - 1) + (phase == Phase::CharacterDefine ? 1 : 0));
}

Pointer Pointer::stage(StageName stage, Phase phase, std::optional<ElementType> element) {
    for (auto p : all_pointers()) {
        const auto& i = info(p);
        if (i.stage == stage && i.phase == phase && i.element == element) return p;
    }
    throw Error(Errc::InvalidArgument, "no such stage pointer");
}

Pointer Pointer::finish() { return Pointer(kCount - 3); }
Pointer Pointer::replay() { return Pointer(kCount - 2); }

std::optional<Pointer> Pointer::from_name(std::string_view name) {
    const auto& t = table();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].name == name) return Pointer(i);
    }
    return std::nullopt;
}

std::optional<Pointer> Pointer::from_ordinal(std::size_t ordinal) {
    if (ordinal >= kCount) return std::nullopt;
    return Pointer(ordinal);
}

std::string Pointer::name() const { return info(*this).name; }
Phase Pointer::phase() const { return info(*this).phase; }
std::optional<StageName> Pointer::stage() const { return info(*this).stage; }
std::optional<int> Pointer::character_index() const { return info(*this).character; }
std::optional<ElementType> Pointer::element() const { return info(*this).element; }

Pointer Pointer::next() const {
    if (is_done()) throw Error(Errc::InvalidArgument, "Done has no successor");
    return Pointer(ordinal_ + 1u);
}

std::span<const Pointer> all_pointers() {
    static const std::array<Pointer, Pointer::kCount> pointers = [] {
        std::array<Pointer, Pointer::kCount> a{};
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = *Pointer::from_ordinal(i);
        return a;
    }();
    return pointers;
}

Expectation expected_input(Pointer pointer) {
    switch (pointer.phase()) {
    case Phase::Initiate: return Expectation::bootstrap();
    case Phase::Done: return Expectation::terminal();
    case Phase::CharacterSelect:
    case Phase::ElementSelect: return Expectation::scan(*pointer.element());
    default: return Expectation::speech();
    }
}

std::string describe(const Expectation& e) {
    switch (e.kind) {
    case Expectation::Kind::Bootstrap: return "bootstrap";
    case Expectation::Kind::Scan: return "scan(" + std::string(element_type_name(e.element)) + ")";
    case Expectation::Kind::Speech: return "speech";
    case Expectation::Kind::Terminal: return "terminal";
    }
    return "terminal";
}

} // namespace taleboard

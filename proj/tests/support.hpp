#pragma once

// Fixtures and generators shared by the test binaries.

#include "taleboard/catalog.hpp"
#include "taleboard/child_agent.hpp"
#include "taleboard/dialogue.hpp"
#include "taleboard/gateway.hpp"
#include "taleboard/persistence.hpp"
#include "taleboard/session.hpp"
#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#ifndef TALEBOARD_SOURCE_DIR
#error "TALEBOARD_SOURCE_DIR must be defined"
#endif

namespace tbtest {

using namespace taleboard;

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(TALEBOARD_SOURCE_DIR) / rel;
}

inline std::string slurp(const std::filesystem::path& p) { return read_file(p); }

inline nlohmann::json load_json(const std::string& rel) { return nlohmann::json::parse(slurp(source_path(rel))); }

struct RecordedSession {
    std::vector<std::string> lessons;
    std::vector<SelectionRow> rows; // 15 rows
    std::map<std::string, std::string> confirmations;
    std::string followup;
};

inline RecordedSession recorded_session() {
    const auto doc = load_json("tests/fixtures/recorded_session.json");
    RecordedSession t;
    t.lessons = doc.at("lessons").get<std::vector<std::string>>();
    for (const auto& r : doc.at("selections")) {
        t.rows.push_back({r.at("stage").get<std::string>(), r.at("element").get<std::string>(),
                          r.at("selection").get<std::string>(), r.at("definition").get<std::string>()});
    }
    t.confirmations = doc.at("confirmations").get<std::map<std::string, std::string>>();
    t.followup = doc.at("followup").get<std::string>();
    return t;
}

// Start, Journey, Climax, End texts.
inline std::array<std::string, 4> recorded_story() {
    const auto doc = load_json("tests/fixtures/recorded_story.json");
    return {doc.at("Start").get<std::string>(), doc.at("Journey").get<std::string>(),
            doc.at("Climax").get<std::string>(), doc.at("End").get<std::string>()};
}

// The default options plus the two emotions the recorded session uses that
// are not on the default list.
inline ElementCatalog recorded_catalog() {
    auto doc = nlohmann::json::parse(default_catalog().to_json());
    doc["emotion"].push_back("Anxiety");
    doc["emotion"].push_back("Fear");
    return ElementCatalog::from_json(doc.dump());
}

inline const SelectionRow& row_for(const RecordedSession& t, Pointer p) {
    static const char* ordinal[] = {"First", "Second", "Third"};
    std::string stage, element;
    if (auto k = p.character_index()) {
        stage = "Character";
        element = ordinal[*k - 1];
    } else {
        stage = std::string(board_page(*p.stage()));
        const auto e = element_type_name(*p.element());
        element = std::string(e);
        element[0] = static_cast<char>(element[0] - 'a' + 'A');
    }
    for (const auto& r : t.rows) {
        if (r.stage == stage && r.element == element) return r;
    }
    throw std::runtime_error("no table row for " + p.name());
}

// One input per input-consuming pointer, in canonical order.
inline std::vector<StepInput> recorded_inputs(const RecordedSession& t) {
    std::vector<StepInput> inputs;
    for (Pointer p : all_pointers()) {
        const Expectation e = expected_input(p);
        switch (e.kind) {
        case Expectation::Kind::Bootstrap: inputs.emplace_back(Bootstrap{}); break;
        case Expectation::Kind::Scan: inputs.emplace_back(ScanEvent{e.element, row_for(t, p).selection}); break;
        case Expectation::Kind::Speech:
            if (p.phase() == Phase::CharacterDefine || p.phase() == Phase::ElementDefine) {
                inputs.emplace_back(SpeechEvent{row_for(t, p).definition});
            } else {
                inputs.emplace_back(SpeechEvent{t.confirmations.at(p.name())});
            }
            break;
        case Expectation::Kind::Terminal: break;
        }
    }
    return inputs;
}

// Backend replies for the replay: the recorded story parts at each Complete
// state, short acknowledgements elsewhere.
inline std::vector<std::string> recorded_responses(const RecordedSession& t, const std::array<std::string, 4>& story) {
    std::vector<std::string> out;
    for (Pointer p : all_pointers()) {
        if (p.is_done()) break;
        if (p.phase() == Phase::Complete) {
            out.push_back(story[static_cast<std::size_t>(*p.stage())] + "\n---\n" + t.followup);
        } else {
            out.push_back("Tinker reply for " + p.name());
        }
    }
    return out;
}

inline DialogueManager recorded_dialogue() { return DialogueManager(recorded_catalog(), default_prompt_catalog()); }

// Session advanced `steps` times with the template backend and a scripted
// child; steps is clamped to a full game.
inline Session reachable_session(const DialogueManager& dm, std::uint64_t seed, std::size_t steps) {
    TemplateBackend backend;
    ScriptedChild child(seed, default_phrase_bank(), dm.catalog());
    Session s = new_session({"Do not lie", "Get along with friends"}, static_cast<std::int64_t>(seed),
                            "t-" + std::to_string(seed));
    std::string utterance;
    for (std::size_t i = 0; i < steps && !s.pointer.is_done(); ++i) {
        const Expectation e = expected_input(s.pointer);
        StepInput input = Bootstrap{};
        if (e.kind != Expectation::Kind::Bootstrap) {
            input = std::visit([](const auto& v) -> StepInput { return v; }, child.respond(utterance, e));
        }
        auto out = dm.step(s, input, backend);
        s = std::move(out.session);
        utterance = std::move(out.agent_utterance);
    }
    return s;
}

// Random printable text, sometimes with multi-byte characters and newlines.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len = 40) {
    static const std::vector<std::string> pieces = {"a", "B", " ", "z", "7", "\n", "\"", "\\", "{", "}",
                                                    "${", "---", "\xC3\xA9", "\xE2\x80\x99", "\xF0\x9F\x90\xB2",
                                                    "name is ", "\t", "Troll", ","};
    std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, pieces.size() - 1);
    std::string out;
    for (std::size_t n = len(rng), i = 0; i < n; ++i) out += pieces[pick(rng)];
    return out;
}

// Chat backend whose replies are random text; Complete requests get a
// non-empty narrative and a follow-up.
class RandomBackend final : public ChatBackend {
public:
    explicit RandomBackend(std::uint64_t seed) : rng_(seed) {}

    BackendKind kind() const override { return BackendKind::Scripted; }
    std::string send(const PromptRequest& request) override {
        if (request.tag.ends_with(":Complete")) {
            return "Part " + random_text(rng_) + "\n---\n" + random_text(rng_, 8);
        }
        return random_text(rng_);
    }

private:
    std::mt19937_64 rng_;
};

// A valid session reached by a random number of steps with random speech,
// random scans, random lessons and sometimes a saved title.
inline Session random_session(const DialogueManager& dm, std::mt19937_64& rng) {
    std::vector<std::string> lessons;
    for (std::size_t n = 1 + rng() % 3, i = 0; i < n; ++i) lessons.push_back("Lesson " + random_text(rng, 6));
    std::optional<std::int64_t> seed;
    if (rng() % 2) seed = static_cast<std::int64_t>(rng() % 2000000) - 1000000;
    Session s = new_session(lessons, seed, "r-" + std::to_string(rng() % 1000000000));
    RandomBackend backend(rng());
    const std::size_t steps = rng() % 47;
    for (std::size_t i = 0; i < steps && !s.pointer.is_done(); ++i) {
        const Expectation e = expected_input(s.pointer);
        StepInput input = Bootstrap{};
        if (e.kind == Expectation::Kind::Scan) {
            const auto& options = dm.catalog().options(e.element);
            input = ScanEvent{e.element, options[rng() % options.size()]};
        } else if (e.kind == Expectation::Kind::Speech) {
            input = SpeechEvent{random_text(rng)};
        }
        s = dm.step(s, input, backend).session;
    }
    if (rng() % 4 == 0) s.saved_title = "Title " + random_text(rng, 5);
    return s;
}

} // namespace tbtest

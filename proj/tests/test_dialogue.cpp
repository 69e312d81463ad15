#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

using namespace taleboard;

namespace {

Errc step_error(const DialogueManager& dm, const Session& s, const StepInput& in, ChatBackend& b) {
    try {
        dm.step(s, in, b);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("step did not throw");
    return Errc::InvalidArgument;
}

// Session at `target`, played with the template backend.
Session session_at(const DialogueManager& dm, Pointer target) {
    return tbtest::reachable_session(dm, 11, target.ordinal());
}

} // namespace

TEST_CASE("scan at Character:1:Select records the character") {
    const DialogueManager dm;
    TemplateBackend b;
    const Session s = session_at(dm, Pointer::character(1, Phase::CharacterSelect));
    REQUIRE(s.pointer == Pointer::character(1, Phase::CharacterSelect));
    const auto out = dm.step(s, ScanEvent{ElementType::Character, "troll"}, b);
    CHECK(out.session.pointer == Pointer::character(1, Phase::CharacterDefine));
    CHECK(out.session.characters.at(0).option == "Troll");
    CHECK(out.expects == Expectation::speech());
    CHECK_FALSE(out.agent_utterance.empty());
}

TEST_CASE("wrong input kind leaves the session unchanged") {
    const DialogueManager dm;
    TemplateBackend b;
    const Session s = session_at(dm, Pointer::character(1, Phase::CharacterSelect));
    const Session before = s;
    CHECK(step_error(dm, s, SpeechEvent{"hello"}, b) == Errc::WrongInputKind);
    CHECK(s == before);
    CHECK(step_error(dm, s, ScanEvent{ElementType::Place, "Bridge"}, b) == Errc::WrongInputKind);
    CHECK(step_error(dm, s, Bootstrap{}, b) == Errc::WrongInputKind);
    CHECK(step_error(dm, s, ScanEvent{ElementType::Character, "Dragon"}, b) == Errc::InvalidOption);
    CHECK(s == before);
}

TEST_CASE("emotion definition moves to Complete") {
    const auto dm = tbtest::recorded_dialogue();
    const auto t = tbtest::recorded_session();
    ScriptedBackend b(tbtest::recorded_responses(t, tbtest::recorded_story()));
    const auto inputs = tbtest::recorded_inputs(t);
    Session s = new_session(t.lessons, 1, "x");
    const Pointer target = Pointer::stage(StageName::Introduction, Phase::ElementDefine, ElementType::Emotion);
    std::size_t i = 0;
    while (s.pointer != target) s = dm.step(s, inputs[i++], b).session;
    const std::string def = "Pearl is feeling sad because she misses her home in the ocean.";
    const auto out = dm.step(s, SpeechEvent{def}, b);
    CHECK(out.session.pointer == Pointer::stage(StageName::Introduction, Phase::Complete));
    CHECK(out.session.stage_data.at(StageName::Introduction).elements.at(ElementType::Emotion).definition == def);
}

TEST_CASE("recorded session replay") {
    const auto t = tbtest::recorded_session();
    const auto story = tbtest::recorded_story();
    const auto dm = tbtest::recorded_dialogue();
    ScriptedBackend b(tbtest::recorded_responses(t, story));
    Session s = new_session(t.lessons, 1, "recorded");
    std::vector<std::string> trace;
    for (const auto& in : tbtest::recorded_inputs(t)) {
        trace.push_back(s.pointer.name());
        const auto out = dm.step(s, in, b);
        CHECK(out.session.pointer.ordinal() == s.pointer.ordinal() + 1);
        s = out.session;
    }
    CHECK(trace.size() == 45);
    CHECK(trace.front() == "Initiate");
    CHECK(trace.back() == "Replay");
    CHECK(s.pointer.is_done());
    CHECK(b.remaining() == 0);
    CHECK(selections_table(s) == t.rows);
    CHECK(full_story(s).parts == story);
    CHECK_FALSE(check_invariants(s));

    // Shape at Finish: 3 characters and 12 stage elements, all filled in.
    CHECK(s.characters.size() == 3);
    std::size_t elements = 0;
    for (const auto& [stage, rec] : s.stage_data) {
        for (const auto& [type, r] : rec.elements) {
            CHECK_FALSE(r.option.empty());
            CHECK_FALSE(r.definition.empty());
            ++elements;
        }
    }
    CHECK(elements == 12);

    // Complete utterances carry the narrative then the follow-up question.
    const auto& entries = s.transcript;
    const auto it = std::find_if(entries.begin(), entries.end(), [](const TranscriptEntry& e) {
        return e.role == Speaker::Tinker && e.pointer == Pointer::stage(StageName::Introduction, Phase::Complete);
    });
    REQUIRE(it != entries.end());
    CHECK(it->text == story[0] + "\n\n" + t.followup);
}

TEST_CASE("story_so_far at each Complete equals the prefix") {
    const auto t = tbtest::recorded_session();
    const auto story = tbtest::recorded_story();
    const auto dm = tbtest::recorded_dialogue();
    ScriptedBackend b(tbtest::recorded_responses(t, story));
    Session s = new_session(t.lessons, 1, "prefix");
    for (const auto& in : tbtest::recorded_inputs(t)) {
        if (s.pointer.phase() == Phase::Complete) {
            const auto k = static_cast<std::size_t>(*s.pointer.stage());
            std::vector<std::string> prefix(story.begin(), story.begin() + static_cast<std::ptrdiff_t>(k));
            CHECK(story_so_far(s) == text::join(prefix, "\n\n"));
        }
        s = dm.step(s, in, b).session;
    }
}

TEST_CASE("backend failure is atomic") {
    const DialogueManager dm;
    const Session s = session_at(dm, Pointer::stage(StageName::Development, Phase::ElementDefine, ElementType::Item));
    const Session before = s;
    ScriptedBackend empty({});
    CHECK(step_error(dm, s, SpeechEvent{"A shiny boot"}, empty) == Errc::QueueExhausted);
    CHECK(s == before);

    // A Complete reply with no narrative is rejected too.
    const Session c = session_at(dm, Pointer::stage(StageName::Crisis, Phase::Complete));
    ScriptedBackend blank({"\n---\nDid you like it?"});
    CHECK(step_error(dm, c, SpeechEvent{"yes"}, blank) == Errc::BadResponse);
}

TEST_CASE("empty speech is accepted and noted") {
    const DialogueManager dm;
    TemplateBackend b;
    const Session s = session_at(dm, Pointer::character(1, Phase::CharacterDefine));
    const auto out = dm.step(s, SpeechEvent{""}, b);
    CHECK(out.session.pointer == Pointer::character(2, Phase::CharacterSelect));
    CHECK(out.session.characters.at(0).definition == "");
    const auto& child = out.session.transcript.at(out.session.transcript.size() - 2);
    CHECK(child.role == Speaker::Child);
    CHECK_FALSE(child.note.empty());
}

TEST_CASE("every pointer rejects every other input kind") {
    const DialogueManager dm;
    TemplateBackend b;
    std::vector<StepInput> probes{Bootstrap{}, SpeechEvent{"hi"}};
    for (auto type : kElementTypes) probes.emplace_back(ScanEvent{type, dm.catalog().options(type).front()});
    for (Pointer p : all_pointers()) {
        const Session s = session_at(dm, p);
        REQUIRE(s.pointer == p);
        for (const auto& in : probes) {
            const auto e = expected_input(p);
            bool matches = false;
            if (e.kind == Expectation::Kind::Bootstrap) matches = std::holds_alternative<Bootstrap>(in);
            if (e.kind == Expectation::Kind::Speech) matches = std::holds_alternative<SpeechEvent>(in);
            if (e.kind == Expectation::Kind::Scan) {
                matches = std::holds_alternative<ScanEvent>(in) && std::get<ScanEvent>(in).type == e.element;
            }
            if (matches) continue;
            const Session before = s;
            CHECK(step_error(dm, s, in, b) == Errc::WrongInputKind);
            CHECK(s == before);
        }
    }
}

TEST_CASE("template backend story parts name the chosen place") {
    const DialogueManager dm;
    TemplateBackend b;
    const Session s = session_at(dm, Pointer::stage(StageName::Introduction, Phase::Complete));
    const auto place = s.stage_data.at(StageName::Introduction).elements.at(ElementType::Place).option;
    ExchangeLog log;
    const auto out = dm.step(s, SpeechEvent{"yes"}, b, &log);
    REQUIRE(log.size() == 1);
    CHECK(text::to_lower(log.entries()[0].response).find(text::to_lower(place)) != std::string::npos);
    CHECK(log.entries()[0].response.find("\n---\n") != std::string::npos);
    CHECK(out.session.story_parts.at(StageName::Introduction).find("---") == std::string::npos);
}

TEST_CASE("transcript is append-only and history reaches the backend") {
    const DialogueManager dm;
    TemplateBackend t;
    Session s = session_at(dm, Pointer::character(2, Phase::CharacterSelect));
    const auto before = s.transcript;
    ScriptedBackend b({"Great choice!"});
    s = dm.step(s, ScanEvent{ElementType::Character, "Lion"}, b).session;
    REQUIRE(s.transcript.size() == before.size() + 2);
    CHECK(std::equal(before.begin(), before.end(), s.transcript.begin()));
    const auto req = b.received().at(0);
    CHECK(req.tag == "Character:2:Select");
    CHECK(req.history.size() == 2 * 3); // Initiate and both Character:1 turns, as user/assistant pairs
}

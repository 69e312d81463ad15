#include "taleboard/dialogue.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

namespace taleboard {

DialogueManager::DialogueManager(ElementCatalog catalog, PromptCatalog prompts)
    : catalog_(std::move(catalog)), prompts_(std::move(prompts)) {}

DialogueManager::DialogueManager() : DialogueManager(default_catalog(), default_prompt_catalog()) {}

namespace {

bool matches(const Expectation& expected, const StepInput& input) {
    switch (expected.kind) {
    case Expectation::Kind::Bootstrap: return std::holds_alternative<Bootstrap>(input);
    case Expectation::Kind::Speech: return std::holds_alternative<SpeechEvent>(input);
    case Expectation::Kind::Scan: {
        const auto* scan = std::get_if<ScanEvent>(&input);
        return scan && scan->type == expected.element;
    }
    case Expectation::Kind::Terminal: return false;
    }
    return false;
}

ElementRecord& element_slot(Session& s, Pointer p) {
    if (auto k = p.character_index()) {
        if (s.characters.size() < static_cast<std::size_t>(*k)) s.characters.resize(*k);
        return s.characters[*k - 1];
    }
    return s.stage_data[*p.stage()].elements[*p.element()];
}

} // namespace

StepOutcome DialogueManager::step(const Session& session, const StepInput& input,
                                  ChatBackend& backend, ExchangeLog* log) const {
    const Pointer at = session.pointer;
    const Expectation expected = expected_input(at);
    if (!matches(expected, input)) {
        throw Error(Errc::WrongInputKind, "at " + at.name() + " expected " + describe(expected) +
                                              ", got " + describe(input));
    }

    Session next = session;
    StepInput consumed = input;
    std::string child_text;
    std::string note;

    if (auto* scan = std::get_if<ScanEvent>(&consumed)) {
        auto label = catalog_.validate_option(scan->type, scan->text);
        if (!label) {
            throw Error(Errc::InvalidOption, "\"" + scan->text + "\" is not a " +
                                                 std::string(element_type_name(scan->type)) +
                                                 " option");
        }
        scan->text = *label;
        child_text = *label;
        ElementRecord& slot = element_slot(next, at);
        slot.option = *label;
        slot.definition.clear();
    } else if (auto* speech = std::get_if<SpeechEvent>(&consumed)) {
        child_text = speech->text;
        if (text::trim(speech->text).empty()) note = "speech capture was empty";
        const Phase phase = at.phase();
        if (phase == Phase::CharacterDefine || phase == Phase::ElementDefine) {
            element_slot(next, at).definition = speech->text;
        }
    }

    PromptRequest request = prompts_.render(at, next, consumed);
    const std::string response = complete(backend, request, log);

    std::string utterance = response;
    if (at.phase() == Phase::Complete) {
        StoryPart part = split_story_part(response, prompts_.story_delimiter());
        if (part.narrative.empty()) {
            throw Error(Errc::BadResponse, "backend returned no story text at " + at.name());
        }
        next.story_parts[*at.stage()] = part.narrative;
        utterance = part.followup.empty() ? part.narrative : part.narrative + "\n\n" + part.followup;
    }

    if (!std::holds_alternative<Bootstrap>(consumed)) {
        next.transcript.push_back({Speaker::Child, child_text, at, {}, note});
    }
    next.transcript.push_back({Speaker::Tinker, utterance, at, request.user, {}});
    next.pointer = at.next();

    StepOutcome outcome{std::move(next), std::move(utterance), {}};
    outcome.expects = expected_input(outcome.session.pointer);
    return outcome;
}

} // namespace taleboard

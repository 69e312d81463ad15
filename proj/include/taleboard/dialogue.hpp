#pragma once

#include "taleboard/catalog.hpp"
#include "taleboard/gateway.hpp"
#include "taleboard/pointer.hpp"
#include "taleboard/prompts.hpp"
#include "taleboard/session.hpp"

#include <string>

namespace taleboard {

struct StepOutcome {
    Session session;
    std::string agent_utterance;
    Expectation expects; // Terminal iff session.pointer is Done
};

// Drives the pointer state machine. Holds no mutable state: every call works
// on a copy of the incoming session, so a failed step leaves the caller's
// session untouched.
class DialogueManager {
public:
    DialogueManager(ElementCatalog catalog, PromptCatalog prompts);
    DialogueManager();

    const ElementCatalog& catalog() const { return catalog_; }
    const PromptCatalog& prompts() const { return prompts_; }

    // Consumes one input at session.pointer: validates and records it, renders
    // the prompt, asks the backend, stores the story part at S:Complete and
    // advances the pointer by one state.
    //
    // Errors: WrongInputKind and InvalidOption for protocol violations, any
    // backend error code for failed completions, BadResponse when a Complete
    // reply carries no narrative.
    StepOutcome step(const Session& session, const StepInput& input, ChatBackend& backend,
                     ExchangeLog* log = nullptr) const;

private:
    ElementCatalog catalog_;
    PromptCatalog prompts_;
};

} // namespace taleboard

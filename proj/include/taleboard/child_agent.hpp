#pragma once

#include "taleboard/catalog.hpp"
#include "taleboard/gateway.hpp"
#include "taleboard/pointer.hpp"
#include "taleboard/session.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace taleboard {

// Definition templates for the scripted child. Slots: {label}, {label_lower},
// {name} (a given name for characters) and {friend} (a character named earlier).
struct PhraseBank {
    std::map<ElementType, std::vector<std::string>> definitions;
    std::vector<std::string> replies;
    std::vector<std::string> names;

    static PhraseBank from_json(std::string_view json_text);
    static PhraseBank load(const std::filesystem::path& path);
};

const PhraseBank& default_phrase_bank();
std::string_view default_phrase_bank_json();

inline constexpr std::size_t kMaxChildWords = 60;

// System prompt for the role-playing child with the catalog lists filled in.
std::string child_system_prompt(const ElementCatalog& catalog);

class ChildAgent {
public:
    virtual ~ChildAgent() = default;

    // Answers the tinker's utterance with the kind of input it expects.
    // Throws InvalidArgument for Bootstrap or Terminal expectations.
    virtual InputEvent respond(const std::string& tinker_utterance, const Expectation& expects) = 0;

    // Notes about answers the agent had to replace; empty for well-behaved agents.
    virtual std::vector<std::string> deviations() const { return {}; }
};

// Offline child: uniform seeded scans; speech right after a scan defines the
// scanned element from the phrase bank, any other speech is a short reply.
class ScriptedChild : public ChildAgent {
public:
    ScriptedChild(std::uint64_t seed, PhraseBank bank = default_phrase_bank(),
                  ElementCatalog catalog = default_catalog());

    InputEvent respond(const std::string& tinker_utterance, const Expectation& expects) override;

private:
    std::string pick(const std::vector<std::string>& from);
    std::string definition_for(ElementType type, const std::string& label);

    std::mt19937_64 rng_;
    PhraseBank bank_;
    ElementCatalog catalog_;
    std::optional<ScanEvent> last_scan_;
    std::vector<std::string> used_names_;
};

// Child driven by a chat backend. Scan replies are normalized and validated;
// an invalid answer is retried once, then replaced with a seeded choice and
// the replacement is recorded in deviations().
class LlmRolePlayer : public ChildAgent {
public:
    LlmRolePlayer(ChatBackend& backend, std::uint64_t seed, ElementCatalog catalog = default_catalog(),
                  ExchangeLog* log = nullptr);

    InputEvent respond(const std::string& tinker_utterance, const Expectation& expects) override;

    std::vector<std::string> deviations() const override { return deviations_; }
    const std::vector<ChatMessage>& history() const { return history_; }

private:
    std::string ask(const std::string& user);

    ChatBackend& backend_;
    std::mt19937_64 rng_;
    ElementCatalog catalog_;
    ExchangeLog* log_;
    std::string system_;
    std::vector<ChatMessage> history_;
    std::vector<std::string> deviations_;
};

// Maps a free-form scan reply ("Troll!", "I scan the lion") to a catalog
// label of `type`, if one is named.
std::optional<std::string> normalize_scan_reply(const ElementCatalog& catalog, ElementType type,
                                                std::string_view reply);

} // namespace taleboard

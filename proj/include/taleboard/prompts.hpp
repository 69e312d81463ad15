#pragma once

#include "taleboard/pointer.hpp"
#include "taleboard/prompt_request.hpp"
#include "taleboard/session.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace taleboard {

enum class Provenance { Verbatim, Inferred };

std::string_view provenance_name(Provenance provenance);

// Placeholder tokens a template body may contain.
inline constexpr std::string_view kNfcWrittenText = "${NFC_WRITTEN_TEXT}";
inline constexpr std::string_view kSpeechToText = "${SPEECH_TO_TEXT}";
inline constexpr std::string_view kLessons = "${LESSONS}";
inline constexpr std::string_view kStorySoFar = "${GENERATED_STORY_SO_FAR}";

struct PromptTemplate {
    Pointer pointer;
    std::string body;
    Provenance provenance = Provenance::Inferred;
};

// The conversational agent's system prompt.
std::string system_prompt_tinker();

// Immutable mapping pointer -> template for every input-consuming pointer.
class PromptCatalog {
public:
    // Parses a template document:
    //   {"schema_version": 1, "system": "...", "story_delimiter": "---",
    //    "templates": {"<pointer name>": {"body": "...", "provenance": "verbatim|inferred"}}}
    // Throws Error(ParseError) on malformed input, unknown pointers, missing
    // templates, empty bodies or placeholders outside the allowed set.
    static PromptCatalog from_json(std::string_view json_text);
    static PromptCatalog load(const std::filesystem::path& path);

    const PromptTemplate& at(Pointer pointer) const; // throws MissingTemplate
    bool contains(Pointer pointer) const;
    const std::vector<PromptTemplate>& templates() const { return templates_; }

    const std::string& system() const { return system_; }
    const std::string& story_delimiter() const { return delimiter_; }

    // Renders the prompt for the input consumed at `pointer`. `input` must
    // already carry the canonical label for scans. Pure: equal arguments give
    // equal requests. Throws MissingTemplate or MissingPlaceholderData.
    PromptRequest render(Pointer pointer, const Session& session, const StepInput& input) const;

private:
    std::string system_;
    std::string delimiter_ = "---";
    std::vector<PromptTemplate> templates_; // canonical pointer order
};

// Built-in catalog, compiled from data/templates.json.
const PromptCatalog& default_prompt_catalog();
std::string_view default_templates_json();

struct StoryPart {
    std::string narrative;
    std::string followup;
};

// Splits on the first line consisting solely of `delimiter` (surrounding
// whitespace ignored). Without a delimiter the whole response is narrative.
StoryPart split_story_part(std::string_view response, std::string_view delimiter = "---");

// Conversation so far as chat messages: each tinker turn contributes its
// prompt (user) and reply (assistant).
std::vector<ChatMessage> conversation_history(const Session& session);

} // namespace taleboard

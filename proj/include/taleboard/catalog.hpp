#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taleboard {

class ChatBackend;
class ExchangeLog;

enum class ElementType { Character, Place, Item, Emotion };

inline constexpr std::array<ElementType, 4> kElementTypes = {
    ElementType::Character, ElementType::Place, ElementType::Item, ElementType::Emotion};

// Lower-case wire name: "character", "place", "item", "emotion".
std::string_view element_type_name(ElementType type);
std::optional<ElementType> parse_element_type(std::string_view name);

// Allowed option labels per element type. Immutable once constructed.
class ElementCatalog {
public:
    // Throws Error(InvalidArgument) when a list is missing or empty, or when two
    // labels of the same type collide after case folding.
    explicit ElementCatalog(std::map<ElementType, std::vector<std::string>> options);

    const std::vector<std::string>& options(ElementType type) const;

    // Canonical label when `text` matches an option case-insensitively after
    // trimming; nullopt otherwise.
    std::optional<std::string> validate_option(ElementType type, std::string_view text) const;

    std::string to_json() const;
    static ElementCatalog from_json(std::string_view json_text);
    static ElementCatalog load(const std::filesystem::path& path);

    friend bool operator==(const ElementCatalog&, const ElementCatalog&) = default;

private:
    std::map<ElementType, std::vector<std::string>> options_;
};

// The built-in option lists shipped on the physical board.
const ElementCatalog& default_catalog();

std::optional<std::string> validate_option(const ElementCatalog& catalog, ElementType type,
                                           std::string_view text);

struct ExtractionResult {
    std::vector<std::string> characters;
    std::vector<std::string> places;
    std::vector<std::string> items;
    std::vector<std::string> emotions;
    std::string lesson;
    // Labels dropped during parsing (multi-word or empty), one message each.
    std::vector<std::string> warnings;

    const std::vector<std::string>& of(ElementType type) const;
};

// The extraction prompt with {{STORY}} substituted.
std::string extraction_prompt(std::string_view story_text);

// Parses the labeled-list layout ("Characters: a, b" ... "Lesson: ..."). Throws
// Error(ParseError) when any of the five lines is missing.
ExtractionResult parse_extraction(std::string_view response);

// Renders the extraction prompt, submits it and parses the answer.
ExtractionResult extract_elements(std::string_view story_text, ChatBackend& backend,
                                  ExchangeLog* log = nullptr);

// Case-folded union of several extraction results, first spelling wins. Types
// with no labels at all are left empty, so the result may not form a valid
// ElementCatalog on its own.
std::map<ElementType, std::vector<std::string>> merge_extractions(
    const std::vector<ExtractionResult>& results);

} // namespace taleboard

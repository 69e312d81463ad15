#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules. ASCII-only case folding; UTF-8
// bytes outside ASCII pass through unchanged.
namespace taleboard::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Replaces every occurrence of `from`; returns the number of replacements.
std::size_t replace_all(std::string& s, std::string_view from, std::string_view to);

// Extracts X from a "... name is X ..." phrase; X must start with an uppercase letter.
std::optional<std::string> given_name(std::string_view definition);

// Lower-cased word tokens. Word characters are ASCII alphanumerics, apostrophes
// and any non-ASCII byte; possessive "'s" endings are dropped.
std::vector<std::string> words(std::string_view s);

// Strips common derivational and inflectional suffixes so that related word
// forms ("anxious", "anxiety") compare equal.
std::string stem(std::string_view lower_word);

// Simple glob: '*' matches any run of characters (including none).
bool glob_match(std::string_view pattern, std::string_view s);

// Replaces {key} slots (lowercase, digits, underscore) with values from `facts`;
// unknown keys become empty strings, other braces are kept.
std::string fill_slots(std::string_view tmpl, const std::map<std::string, std::string>& facts);

} // namespace taleboard::text

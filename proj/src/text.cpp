#include "taleboard/text.hpp"
#include "taleboard/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

namespace taleboard {

std::string_view errc_name(Errc code) {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NotFound: return "NotFound";
    case Errc::EmptyLessons: return "EmptyLessons";
    case Errc::WrongInputKind: return "WrongInputKind";
    case Errc::InvalidOption: return "InvalidOption";
    case Errc::MissingTemplate: return "MissingTemplate";
    case Errc::MissingPlaceholderData: return "MissingPlaceholderData";
    case Errc::Incomplete: return "Incomplete";
    case Errc::Transport: return "Transport";
    case Errc::Auth: return "Auth";
    case Errc::RateLimited: return "RateLimited";
    case Errc::QueueExhausted: return "QueueExhausted";
    case Errc::BadResponse: return "BadResponse";
    case Errc::ParseError: return "ParseError";
    case Errc::TurnLimitExceeded: return "TurnLimitExceeded";
    case Errc::CategoryMappingError: return "CategoryMappingError";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::IncompleteStory: return "IncompleteStory";
    case Errc::DuplicateTitleForSession: return "DuplicateTitleForSession";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace taleboard

namespace taleboard::text {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool is_word_byte(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '\'' || u >= 0x80;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

} // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (lower(a[i]) != lower(b[i])) return false;
    }
    return true;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::size_t replace_all(std::string& s, std::string_view from, std::string_view to) {
    if (from.empty()) return 0;
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
        ++count;
    }
    return count;
}

std::optional<std::string> given_name(std::string_view definition) {
    const std::string lowered = to_lower(definition);
    std::size_t pos = 0;
    while ((pos = lowered.find("name is ", pos)) != std::string::npos) {
        std::size_t i = pos + 8;
        while (i < definition.size() && is_space(definition[i])) ++i;
        std::size_t j = i;
        while (j < definition.size() &&
               (std::isalpha(static_cast<unsigned char>(definition[j])) || definition[j] == '-')) {
            ++j;
        }
        if (j > i && std::isupper(static_cast<unsigned char>(definition[i]))) {
            return std::string(definition.substr(i, j - i));
        }
        pos += 8;
    }
    return std::nullopt;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && !is_word_byte(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && is_word_byte(s[j])) ++j;
        if (j > i) {
            std::string w = to_lower(s.substr(i, j - i));
            for (std::string_view suffix : {std::string_view("'s"), std::string_view("\xE2\x80\x99s")}) {
                if (ends_with(w, suffix) && w.size() > suffix.size()) {
                    w.resize(w.size() - suffix.size());
                    break;
                }
            }
            while (!w.empty() && w.back() == '\'') w.pop_back();
            while (!w.empty() && w.front() == '\'') w.erase(w.begin());
            if (!w.empty()) out.push_back(std::move(w));
        }
        i = j;
    }
    return out;
}

std::string stem(std::string_view lower_word) {
    // Longest suffixes first; a stem keeps at least three characters.
    static constexpr std::array<std::string_view, 16> suffixes = {
        "fulness", "ousness", "ities", "iness", "ness", "ment", "ful", "ity", "ety",
        "ous", "ing", "ies", "ed", "es", "ly", "s"};
    std::string w(lower_word);
    for (auto suffix : suffixes) {
        if (ends_with(w, suffix) && w.size() >= suffix.size() + 3) {
            w.resize(w.size() - suffix.size());
            break;
        }
    }
    if (w.size() > 3 && (w.back() == 'y' || w.back() == 'e')) w.pop_back();
    return w;
}

bool glob_match(std::string_view pattern, std::string_view s) {
    std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
    while (i < s.size()) {
        if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = i;
        } else if (p < pattern.size() && pattern[p] == s[i]) {
            ++p;
            ++i;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            i = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::string fill_slots(std::string_view tmpl, const std::map<std::string, std::string>& facts) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const auto close = tmpl.find('}', open);
        bool is_slot = close != std::string_view::npos && close > open + 1;
        if (is_slot) {
            for (auto c : tmpl.substr(open + 1, close - open - 1)) {
                if (!(std::islower(static_cast<unsigned char>(c)) ||
                      std::isdigit(static_cast<unsigned char>(c)) || c == '_')) {
                    is_slot = false;
                    break;
                }
            }
        }
        if (!is_slot) {
            out += '{';
            pos = open + 1;
            continue;
        }
        auto it = facts.find(std::string(tmpl.substr(open + 1, close - open - 1)));
        if (it != facts.end()) out += it->second;
        pos = close + 1;
    }
    return out;
}

} // namespace taleboard::text

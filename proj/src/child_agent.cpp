#include "taleboard/child_agent.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace taleboard {

using nlohmann::json;

namespace {

constexpr std::string_view kChildPrompt =
    "You are a role-player simulating a child aged 4-6 playing an interactive storytelling board "
    "game. You will follow the AI's guidance throughout the game, taking actions such as scanning "
    "a pawn or token or responding verbally on each turn. When it's time to scan, simply return the "
    "selected option without adding anything extra (e.g., Queen), and when responding verbally, "
    "just answer in natural conversational language.\n"
    "\n"
    "The items that can be scanned are as follows:\n"
    "\n"
    "Characters = {{CHARACTERS}}\n"
    "\n"
    "Places = {{PLACES}}\n"
    "\n"
    "Items = {{ITEMS}}\n"
    "\n"
    "Emotions = {{EMOTIONS}}";

std::size_t word_count(std::string_view s) {
    std::istringstream in{std::string(s)};
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    return n;
}

// Keeps the first kMaxChildWords whitespace-separated words.
std::string clip_words(const std::string& s) {
    if (word_count(s) <= kMaxChildWords) return s;
    std::istringstream in(s);
    std::vector<std::string> kept;
    for (std::string w; kept.size() < kMaxChildWords && in >> w;) kept.push_back(w);
    return text::join(kept, " ");
}

void require_respondable(const Expectation& expects) {
    if (expects.kind == Expectation::Kind::Bootstrap || expects.kind == Expectation::Kind::Terminal) {
        throw Error(Errc::InvalidArgument, "child cannot answer an expectation of " + describe(expects));
    }
}

} // namespace

PhraseBank PhraseBank::from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("phrase bank is not valid JSON: ") + e.what());
    }
    if (doc.value("schema_version", 0) != 1) {
        throw Error(Errc::SchemaVersionMismatch, "phrase bank schema_version must be 1");
    }
    PhraseBank bank;
    try {
        for (auto type : kElementTypes) {
            const std::string key(element_type_name(type));
            auto list = doc.at(key).get<std::vector<std::string>>();
            if (list.empty()) throw Error(Errc::InvalidArgument, "phrase bank has no " + key + " templates");
            for (const auto& t : list) {
                if (t.find("{label") == std::string::npos && type != ElementType::Character) {
                    throw Error(Errc::InvalidArgument, "phrase bank template lacks a {label} slot: " + t);
                }
                if (type == ElementType::Character && t.find("{name}") == std::string::npos) {
                    throw Error(Errc::InvalidArgument, "character template lacks a {name} slot: " + t);
                }
            }
            bank.definitions[type] = std::move(list);
        }
        bank.replies = doc.at("reply").get<std::vector<std::string>>();
        bank.names = doc.at("names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed phrase bank: ") + e.what());
    }
    if (bank.replies.empty() || bank.names.empty()) {
        throw Error(Errc::InvalidArgument, "phrase bank needs replies and names");
    }
    return bank;
}

PhraseBank PhraseBank::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

const PhraseBank& default_phrase_bank() {
    static const PhraseBank bank = PhraseBank::from_json(default_phrase_bank_json());
    return bank;
}

std::string child_system_prompt(const ElementCatalog& catalog) {
    std::string out(kChildPrompt);
    text::replace_all(out, "{{CHARACTERS}}", text::join(catalog.options(ElementType::Character), ", "));
    text::replace_all(out, "{{PLACES}}", text::join(catalog.options(ElementType::Place), ", "));
    text::replace_all(out, "{{ITEMS}}", text::join(catalog.options(ElementType::Item), ", "));
    text::replace_all(out, "{{EMOTIONS}}", text::join(catalog.options(ElementType::Emotion), ", "));
    return out;
}

std::optional<std::string> normalize_scan_reply(const ElementCatalog& catalog, ElementType type,
                                                std::string_view reply) {
    std::string cleaned = text::trim(reply);
    while (!cleaned.empty() && std::string_view(".!?\"'*").find(cleaned.back()) != std::string_view::npos) {
        cleaned.pop_back();
    }
    while (!cleaned.empty() && std::string_view("\"'*").find(cleaned.front()) != std::string_view::npos) {
        cleaned.erase(cleaned.begin());
    }
    if (auto exact = catalog.validate_option(type, cleaned)) return exact;

    // Otherwise look for a label spelled out as whole words; the longest wins.
    const std::string haystack = " " + text::join(text::words(reply), " ") + " ";
    std::optional<std::string> best;
    std::size_t best_len = 0;
    for (const auto& label : catalog.options(type)) {
        const std::string needle = " " + text::join(text::words(label), " ") + " ";
        if (needle.size() > 2 && haystack.find(needle) != std::string::npos && needle.size() > best_len) {
            best = label;
            best_len = needle.size();
        }
    }
    return best;
}

ScriptedChild::ScriptedChild(std::uint64_t seed, PhraseBank bank, ElementCatalog catalog)
    : rng_(seed), bank_(std::move(bank)), catalog_(std::move(catalog)) {}

std::string ScriptedChild::pick(const std::vector<std::string>& from) {
    std::uniform_int_distribution<std::size_t> dist(0, from.size() - 1);
    return from[dist(rng_)];
}

std::string ScriptedChild::definition_for(ElementType type, const std::string& label) {
    std::map<std::string, std::string> slots{{"label", label}, {"label_lower", text::to_lower(label)}};
    if (type == ElementType::Character) {
        std::vector<std::string> fresh;
        for (const auto& n : bank_.names) {
            if (std::find(used_names_.begin(), used_names_.end(), n) == used_names_.end()) fresh.push_back(n);
        }
        const std::string name = pick(fresh.empty() ? bank_.names : fresh);
        used_names_.push_back(name);
        slots["name"] = name;
    }
    slots["friend"] = used_names_.empty() ? "My friend" : pick(used_names_);
    std::string out = text::fill_slots(pick(bank_.definitions.at(type)), slots);
    // Sentences that open with a slot still start with a capital letter.
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return clip_words(out);
}

InputEvent ScriptedChild::respond(const std::string&, const Expectation& expects) {
    require_respondable(expects);
    if (expects.kind == Expectation::Kind::Scan) {
        ScanEvent scan{expects.element, pick(catalog_.options(expects.element))};
        last_scan_ = scan;
        return scan;
    }
    if (last_scan_) {
        const ScanEvent scan = *last_scan_;
        last_scan_.reset();
        return SpeechEvent{definition_for(scan.type, scan.text)};
    }
    return SpeechEvent{clip_words(pick(bank_.replies))};
}

LlmRolePlayer::LlmRolePlayer(ChatBackend& backend, std::uint64_t seed, ElementCatalog catalog,
                             ExchangeLog* log)
    : backend_(backend), rng_(seed), catalog_(std::move(catalog)), log_(log),
      system_(child_system_prompt(catalog_)) {}

std::string LlmRolePlayer::ask(const std::string& user) {
    PromptRequest request;
    request.system = system_;
    request.user = user;
    request.history = history_;
    request.tag = "Child";
    const std::string reply = complete(backend_, request, log_);
    history_.push_back({"user", user});
    history_.push_back({"assistant", reply});
    return reply;
}

InputEvent LlmRolePlayer::respond(const std::string& tinker_utterance, const Expectation& expects) {
    require_respondable(expects);
    if (expects.kind == Expectation::Kind::Speech) return SpeechEvent{text::trim(ask(tinker_utterance))};

    const ElementType type = expects.element;
    std::string reply = ask(tinker_utterance);
    if (auto label = normalize_scan_reply(catalog_, type, reply)) return ScanEvent{type, *label};

    const std::string type_name(element_type_name(type));
    reply = ask("Please scan one " + type_name + " from this list and reply with just its name: " +
                text::join(catalog_.options(type), ", "));
    if (auto label = normalize_scan_reply(catalog_, type, reply)) return ScanEvent{type, *label};

    const auto& options = catalog_.options(type);
    std::uniform_int_distribution<std::size_t> dist(0, options.size() - 1);
    const std::string chosen = options[dist(rng_)];
    deviations_.push_back("child reply \"" + text::trim(reply) + "\" is not a " + type_name +
                          " option; scanned \"" + chosen + "\" instead");
    return ScanEvent{type, chosen};
}

} // namespace taleboard

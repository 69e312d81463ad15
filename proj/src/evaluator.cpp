#include "taleboard/evaluator.hpp"

#include "taleboard/error.hpp"
#include "taleboard/persistence.hpp"
#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace taleboard {

using nlohmann::json;

namespace {

constexpr std::string_view kQuestionnaire =
    "(1) Are all the elements defined by the user (characters, places, items, and moods) included in "
    "the story's plot?\n"
    "Yes / No\n"
    "If yes, to what degree are they important to the plot?\n"
    "[Scale] 1: Not Important at All, 2: Slightly Important, 3:Moderately Important, 4:Very Important, "
    "5:Crucial to the Plot\n"
    "\n"
    "(2) Does the story maintain a logical progression from introduction to conclusion?\n"
    "Yes / No\n"
    "If yes, how clear is the story\xE2\x80\x99s flow of events?\n"
    "[Scale] 1: Very Confusing, 2: Somewhat Confusing, 3: Neutral, 4: Clear, 5: Very Clear\n"
    "\n"
    "(3) Does the story clearly reflect one of the pre-defined lessons as its central theme?\n"
    "Yes / No\n"
    "If yes, to what degree is the lesson effectively conveyed through the story?\n"
    "[Scale] 1: Not Conveyed at All, 2: Slightly Conveyed, 3: Moderately Conveyed, 4: Well Conveyed, "
    "5: Very Well Conveyed";

constexpr std::string_view kJudgeSystem =
    "You evaluate stories written for children aged 4-6. Answer the questionnaire about the story. "
    "Reply with exactly three lines and nothing else, in this format:\n"
    "Elements Relevancy: Yes, Scale: <1-5>\n"
    "Narrative Coherence: Yes, Scale: <1-5>\n"
    "Educational Value: Yes, Scale: <1-5>\n"
    "Write \"No\" without a scale when the answer to a question is no.";

constexpr std::string_view kJudgeReprompt =
    "Your reply did not follow the required format. Reply again with exactly three lines:\n"
    "Elements Relevancy: Yes, Scale: <1-5> (or No)\n"
    "Narrative Coherence: Yes, Scale: <1-5> (or No)\n"
    "Educational Value: Yes, Scale: <1-5> (or No)";

// Lower-cased letters only, so "Elements Relevancy", "elements_relevancy"
// and "**Elements relevancy**" compare equal.
std::string letters(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return out;
}

QualityAnswer parse_answer(const std::string& metric, std::string_view value) {
    const std::string lowered = text::to_lower(value);
    std::size_t i = 0;
    while (i < lowered.size() && !std::isalpha(static_cast<unsigned char>(lowered[i]))) ++i;
    QualityAnswer answer;
    if (lowered.compare(i, 3, "yes") == 0) {
        answer.yes = true;
    } else if (lowered.compare(i, 2, "no") == 0) {
        return answer;
    } else {
        throw Error(Errc::ParseError, metric + ": expected Yes or No");
    }
    const auto at = lowered.find("scale", i);
    if (at == std::string::npos) throw Error(Errc::ParseError, metric + ": Yes needs a scale");
    std::size_t d = at + 5;
    while (d < lowered.size() && !std::isdigit(static_cast<unsigned char>(lowered[d]))) ++d;
    if (d >= lowered.size()) throw Error(Errc::ParseError, metric + ": scale has no number");
    std::size_t end = d;
    while (end < lowered.size() && std::isdigit(static_cast<unsigned char>(lowered[end]))) ++end;
    const int scale = std::stoi(lowered.substr(d, std::min<std::size_t>(end - d, 3)));
    if (scale < 1 || scale > 5) {
        throw Error(Errc::ParseError, metric + ": scale " + std::to_string(scale) + " is outside 1-5");
    }
    answer.scale = scale;
    return answer;
}

std::string selections_block(const std::vector<SelectionRow>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += "- " + r.stage + " / " + r.element + ": " + r.selection;
        if (!r.definition.empty()) out += " (" + r.definition + ")";
        out += "\n";
    }
    return out;
}

double clamp_check(double v, const std::string& category) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw Error(Errc::CategoryMappingError,
                    "score " + std::to_string(v) + " for " + category + " is outside [0,1]");
    }
    return v;
}

std::map<std::string, double> score_with(SafetyClient& client, const CategoryMapping& mapping,
                                         const std::vector<std::string>& rows,
                                         const std::vector<std::string>& texts) {
    std::map<std::string, double> worst;
    for (const auto& t : texts) {
        for (const auto& [row, v] : map_categories(client.score(t), mapping, rows)) {
            auto [it, inserted] = worst.emplace(row, v);
            if (!inserted) it->second = std::max(it->second, v);
        }
    }
    return worst;
}

std::string cell(const char* fmt, double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, mean, std);
    return buf;
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

std::string pad(const std::string& s, std::size_t width) {
    // Display width: count UTF-8 lead bytes only.
    std::size_t shown = 0;
    for (unsigned char c : s) shown += (c & 0xC0) != 0x80;
    return s + std::string(width > shown ? width - shown : 0, ' ');
}

std::string table(const std::string& title, const std::vector<std::pair<std::string, std::string>>& rows,
                  const std::string& header) {
    std::size_t w1 = 8, w2 = header.size();
    for (const auto& [a, b] : rows) {
        w1 = std::max(w1, a.size());
        w2 = std::max(w2, b.size());
    }
    std::string out = title + "\n";
    out += pad("", w1) + "  " + header + "\n";
    out += std::string(w1 + 2 + w2, '-') + "\n";
    for (const auto& [a, b] : rows) out += pad(a, w1) + "  " + b + "\n";
    return out;
}

} // namespace

std::string_view quality_metric_name(QualityMetric metric) {
    switch (metric) {
    case QualityMetric::ElementsRelevancy: return "Elements Relevancy";
    case QualityMetric::NarrativeCoherence: return "Narrative Coherence";
    case QualityMetric::EducationalValue: return "Educational Value";
    }
    return "?";
}

std::string questionnaire_text() { return std::string(kQuestionnaire); }

PromptRequest judge_request(const Story& story, const std::vector<SelectionRow>& selections,
                            const std::vector<std::string>& lessons) {
    PromptRequest r;
    r.system = std::string(kJudgeSystem);
    r.tag = "Judge";
    r.user = "Questionnaire:\n" + std::string(kQuestionnaire) + "\n\nStory:\n" + story.text() +
             "\n\nElements defined by the user:\n" + selections_block(selections) +
             "\nPre-defined lessons: " + text::join(lessons, ", ");
    r.facts["story"] = story.text();
    r.facts["lessons"] = text::join(lessons, ", ");
    return r;
}

QualityScores parse_judge_output(std::string_view response) {
    QualityScores scores;
    for (const auto& raw : text::split(response, '\n')) {
        const auto colon = raw.find(':');
        if (colon == std::string::npos) continue;
        const std::string key = letters(raw.substr(0, colon));
        for (auto metric : kQualityMetrics) {
            if (key != letters(quality_metric_name(metric))) continue;
            const std::string name(quality_metric_name(metric));
            if (scores.answers.count(metric)) throw Error(Errc::ParseError, name + " answered twice");
            scores.answers[metric] = parse_answer(name, std::string_view(raw).substr(colon + 1));
        }
    }
    for (auto metric : kQualityMetrics) {
        if (!scores.answers.count(metric)) {
            throw Error(Errc::ParseError, "judge reply has no line for " + std::string(quality_metric_name(metric)));
        }
    }
    return scores;
}

QualityScores judge_quality(const SessionRecord& record, ChatBackend& judge, ExchangeLog* log) {
    const Story story = full_story(record.session);
    PromptRequest request = judge_request(story, record.selections, record.session.lessons);
    const std::string first = complete(judge, request, log);
    try {
        return parse_judge_output(first);
    } catch (const Error&) {
    }
    request.history.push_back({"user", request.user});
    request.history.push_back({"assistant", first});
    request.user = std::string(kJudgeReprompt);
    return parse_judge_output(complete(judge, request, log));
}

SafetyMappings SafetyMappings::defaults() {
    SafetyMappings m;
    m.moderation = {
        {"harassment", "Harassment"},       {"harassment/threatening", "Harassment"},
        {"hate", "Hate"},                   {"hate/threatening", "Hate"},
        {"illicit", "Illicit"},             {"illicit/violent", "Illicit"},
        {"self-harm", "Self Harm"},         {"self-harm/intent", "Self Harm"},
        {"self-harm/instructions", "Self Harm"}, {"sexual", "Sexual"},
        {"sexual/minors", "Sexual"},        {"violence", "Violence"},
        {"violence/graphic", "Violence"},
    };
    m.perspective = {
        {"TOXICITY", "Toxicity"}, {"IDENTITY_ATTACK", "Identity Attack"},
        {"SEVERE_TOXICITY", "Severe Toxicity"}, {"PROFANITY", "Profanity"},
        {"THREAT", "Threat"},     {"INSULT", "Insult"},
    };
    // Row names map to themselves so fixed clients can report rows directly.
    for (const auto& row : kModerationCategories) m.moderation[row] = row;
    for (const auto& row : kPerspectiveCategories) m.perspective[row] = row;
    return m;
}

SafetyMappings SafetyMappings::from_json(std::string_view json_text) {
    SafetyMappings m = defaults();
    try {
        const auto doc = json::parse(json_text);
        auto read = [&](const char* key, CategoryMapping& into, const std::vector<std::string>& rows) {
            if (!doc.contains(key)) return;
            into.clear();
            for (const auto& [provider, row] : doc.at(key).items()) {
                const auto name = row.get<std::string>();
                if (std::find(rows.begin(), rows.end(), name) == rows.end()) {
                    throw Error(Errc::CategoryMappingError, "\"" + name + "\" is not a " + key + " row");
                }
                into[provider] = name;
            }
        };
        read("moderation", m.moderation, kModerationCategories);
        read("perspective", m.perspective, kPerspectiveCategories);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed category mapping: ") + e.what());
    }
    return m;
}

std::map<std::string, double> map_categories(const std::map<std::string, double>& raw,
                                             const CategoryMapping& mapping,
                                             const std::vector<std::string>& rows) {
    std::map<std::string, double> out;
    for (const auto& [category, value] : raw) {
        clamp_check(value, category);
        auto it = mapping.find(category);
        if (it == mapping.end()) continue;
        if (std::find(rows.begin(), rows.end(), it->second) == rows.end()) {
            throw Error(Errc::CategoryMappingError, "mapping targets unknown row \"" + it->second + "\"");
        }
        auto [slot, inserted] = out.emplace(it->second, value);
        if (!inserted) slot->second = std::max(slot->second, value);
    }
    if (out.empty() && !raw.empty()) {
        throw Error(Errc::CategoryMappingError, "none of the provider's categories are mapped");
    }
    if (raw.empty()) throw Error(Errc::CategoryMappingError, "provider returned no categories");
    return out;
}

FixedSafetyClient::FixedSafetyClient(std::string name, std::map<std::string, double> scores)
    : name_(std::move(name)), scores_(std::move(scores)) {}

std::map<std::string, double> FixedSafetyClient::score(const std::string&) { return scores_; }

SafetyScores score_safety(const std::string& story_text, SafetyClient* moderation,
                          SafetyClient* perspective, const SafetyOptions& options) {
    if (text::trim(story_text).empty()) throw Error(Errc::InvalidArgument, "story text is empty");
    SafetyScores s;
    const std::vector<std::string> texts{story_text};
    if (moderation) s.moderation = score_with(*moderation, options.mappings.moderation, kModerationCategories, texts);
    if (perspective) {
        s.perspective = score_with(*perspective, options.mappings.perspective, kPerspectiveCategories, texts);
    }
    return s;
}

SafetyScores score_safety(const Story& story, SafetyClient* moderation, SafetyClient* perspective,
                          const SafetyOptions& options) {
    if (!options.per_stage) return score_safety(story.text(), moderation, perspective, options);
    std::vector<std::string> texts;
    for (const auto& p : story.parts) {
        if (!text::trim(p).empty()) texts.push_back(p);
    }
    if (texts.empty()) throw Error(Errc::InvalidArgument, "story text is empty");
    SafetyScores s;
    if (moderation) s.moderation = score_with(*moderation, options.mappings.moderation, kModerationCategories, texts);
    if (perspective) {
        s.perspective = score_with(*perspective, options.mappings.perspective, kPerspectiveCategories, texts);
    }
    return s;
}

Stat aggregate(const std::vector<double>& values) {
    if (values.empty()) throw Error(Errc::EmptyInput, "nothing to aggregate");
    Stat s;
    s.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(s.n));
    return s;
}

std::map<QualityMetric, QualityAggregate> aggregate(const std::vector<QualityScores>& scores) {
    if (scores.empty()) throw Error(Errc::EmptyInput, "no quality scores to aggregate");
    std::map<QualityMetric, QualityAggregate> out;
    for (auto metric : kQualityMetrics) {
        std::vector<double> scales;
        std::size_t yes = 0, answered = 0;
        for (const auto& s : scores) {
            auto it = s.answers.find(metric);
            if (it == s.answers.end()) continue;
            ++answered;
            if (it->second.yes) {
                ++yes;
                if (it->second.scale) scales.push_back(*it->second.scale);
            }
        }
        QualityAggregate a;
        a.answers = answered;
        a.yes_rate = answered ? static_cast<double>(yes) / static_cast<double>(answered) : 0.0;
        if (!scales.empty()) a.scale = aggregate(scales);
        out[metric] = a;
    }
    return out;
}

SafetyAggregate aggregate(const std::vector<SafetyScores>& scores) {
    if (scores.empty()) throw Error(Errc::EmptyInput, "no safety scores to aggregate");
    SafetyAggregate out;
    auto fold = [&](auto member, const std::vector<std::string>& rows, std::map<std::string, Stat>& into) {
        for (const auto& row : rows) {
            std::vector<double> values;
            for (const auto& s : scores) {
                const auto& m = s.*member;
                if (auto it = m.find(row); it != m.end()) values.push_back(it->second);
            }
            if (!values.empty()) into[row] = aggregate(values);
        }
    };
    fold(&SafetyScores::moderation, kModerationCategories, out.moderation);
    fold(&SafetyScores::perspective, kPerspectiveCategories, out.perspective);
    return out;
}

std::string format_quality_cell(const Stat& stat) {
    if (stat.std == 0.0) return cell("%.2f (\xC2\xB1%.1f)", stat.mean, 0.0);
    return cell("%.2f (\xC2\xB1%.2f)", stat.mean, stat.std);
}

std::string format_safety_cell(const Stat& stat) {
    return cell("%.4f (\xC2\xB1%.4f)", stat.mean, stat.std);
}

std::vector<RelevancyResult> relevancy_check(const std::vector<SelectionRow>& selections,
                                             const Story& story) {
    auto stems_of = [](std::string_view s) {
        std::set<std::string> out;
        for (const auto& w : text::words(s)) out.insert(text::stem(w));
        return out;
    };
    auto contains_all = [&](const std::set<std::string>& hay, std::string_view phrase) {
        const auto needle = text::words(phrase);
        if (needle.empty()) return false;
        return std::all_of(needle.begin(), needle.end(),
                           [&](const std::string& w) { return hay.count(text::stem(w)) > 0; });
    };

    std::array<std::set<std::string>, 4> stage_words;
    for (std::size_t i = 0; i < 4; ++i) stage_words[i] = stems_of(story.parts[i]);
    const auto all_words = stems_of(story.text());

    std::vector<RelevancyResult> out;
    for (const auto& row : selections) {
        const std::set<std::string>* hay = &all_words;
        if (row.stage != "Character") {
            auto stage = stage_from_board_page(row.stage);
            if (!stage) stage = parse_stage_name(row.stage);
            hay = stage ? &stage_words[static_cast<std::size_t>(*stage)] : nullptr;
        }
        bool found = false;
        if (hay) {
            found = contains_all(*hay, row.selection);
            if (!found) {
                if (auto name = text::given_name(row.definition)) found = contains_all(*hay, *name);
            }
        }
        out.push_back({row, found});
    }
    return out;
}

std::vector<RelevancyResult> relevancy_check(const SessionRecord& record) {
    return relevancy_check(record.selections, record.story);
}

EvaluationReport evaluate_records(const std::vector<SessionRecord>& records, const EvaluateOptions& options) {
    EvaluationReport report;
    report.config["judge"] = options.judge ? std::string(backend_kind_name(options.judge->kind())) : "none";
    report.config["moderation"] = options.run_safety && options.moderation ? options.moderation->name() : "none";
    report.config["perspective"] = options.run_safety && options.perspective ? options.perspective->name() : "none";
    report.config["safety_unit"] = options.safety.per_stage ? "stage" : "story";

    if (options.run_safety && !options.moderation) report.warnings.push_back("moderation client not configured; skipped");
    if (options.run_safety && !options.perspective) report.warnings.push_back("perspective client not configured; skipped");

    for (const auto& record : records) {
        if (!record.ok() || record.session.pointer < Pointer::finish()) {
            ++report.skipped;
            report.warnings.push_back("seed " + std::to_string(record.seed) + " skipped: " +
                                      record.error.value_or("story incomplete"));
            continue;
        }
        ++report.story_count;
        report.seeds.push_back(record.seed);
        report.relevancy.push_back(relevancy_check(record));
        if (options.judge) report.quality.push_back(judge_quality(record, *options.judge, options.log));
        if (options.run_safety && (options.moderation || options.perspective)) {
            report.safety.push_back(score_safety(record.story, options.moderation, options.perspective, options.safety));
        }
    }
    if (!report.quality.empty()) report.quality_summary = aggregate(report.quality);
    if (!report.safety.empty()) report.safety_summary = aggregate(report.safety);
    return report;
}

std::vector<SessionRecord> load_records(const std::filesystem::path& runs_dir) {
    if (!std::filesystem::is_directory(runs_dir)) {
        throw Error(Errc::NotFound, "no runs directory " + runs_dir.string());
    }
    std::vector<SessionRecord> records;
    for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "record.json")) {
            records.push_back(read_record(entry.path()));
        }
    }
    std::sort(records.begin(), records.end(),
              [](const SessionRecord& a, const SessionRecord& b) { return a.seed < b.seed; });
    return records;
}

std::string report_to_json(const EvaluationReport& r) {
    json doc = {{"schema_version", kSchemaVersion}, {"story_count", r.story_count},
                {"skipped", r.skipped},             {"seeds", r.seeds},
                {"warnings", r.warnings},           {"config", r.config}};

    json stories = json::array();
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        json s = {{"seed", r.seeds[i]}};
        json rel = json::array();
        for (const auto& x : r.relevancy[i]) {
            rel.push_back({{"stage", x.row.stage}, {"element", x.row.element},
                           {"selection", x.row.selection}, {"found", x.found}});
        }
        s["relevancy"] = rel;
        if (i < r.quality.size()) {
            json q = json::object();
            for (const auto& [metric, a] : r.quality[i].answers) {
                q[std::string(quality_metric_name(metric))] = {{"answer", a.yes ? "yes" : "no"},
                                                               {"scale", a.scale ? json(*a.scale) : json(nullptr)}};
            }
            s["quality"] = q;
        }
        if (i < r.safety.size()) s["safety"] = {{"moderation", r.safety[i].moderation},
                                                {"perspective", r.safety[i].perspective}};
        stories.push_back(s);
    }
    doc["stories"] = stories;

    json quality = json::object();
    for (const auto& [metric, a] : r.quality_summary) {
        quality[std::string(quality_metric_name(metric))] = {
            {"yes_rate", a.yes_rate}, {"answers", a.answers},
            {"scale", a.scale ? stat_json(*a.scale) : json(nullptr)},
            {"cell", a.scale ? format_quality_cell(*a.scale) : "n/a"}};
    }
    doc["quality"] = quality;

    json safety = json::object();
    if (r.safety_summary) {
        for (const auto& [name, set] : {std::pair{"moderation", &r.safety_summary->moderation},
                                        std::pair{"perspective", &r.safety_summary->perspective}}) {
            json cats = json::object();
            for (const auto& [row, stat] : *set) {
                cats[row] = stat_json(stat);
                cats[row]["cell"] = format_safety_cell(stat);
            }
            safety[name] = cats;
        }
    }
    doc["safety"] = safety;
    return doc.dump(2);
}

std::string report_table(const EvaluationReport& r) {
    std::string out = "Stories evaluated: " + std::to_string(r.story_count);
    if (r.skipped) out += " (skipped " + std::to_string(r.skipped) + ")";
    out += "\n";

    std::size_t checked = 0, found = 0;
    for (const auto& rel : r.relevancy) {
        for (const auto& x : rel) {
            ++checked;
            found += x.found;
        }
    }
    out += "Elements found in story: " + std::to_string(found) + "/" + std::to_string(checked) + "\n";

    if (!r.quality_summary.empty()) {
        std::vector<std::pair<std::string, std::string>> rows;
        for (auto metric : kQualityMetrics) {
            const auto& a = r.quality_summary.at(metric);
            char yes[32];
            std::snprintf(yes, sizeof yes, "  yes %.0f%%", a.yes_rate * 100.0);
            rows.emplace_back(std::string(quality_metric_name(metric)),
                              (a.scale ? format_quality_cell(*a.scale) : std::string("n/a")) + yes);
        }
        out += "\n" + table("Quality (1-5 scale)", rows, "Judge");
    }
    if (r.safety_summary) {
        auto section = [&](const char* title, const std::vector<std::string>& cats,
                           const std::map<std::string, Stat>& stats) {
            std::vector<std::pair<std::string, std::string>> rows;
            for (const auto& c : cats) {
                auto it = stats.find(c);
                rows.emplace_back(c, it == stats.end() ? "absent" : format_safety_cell(it->second));
            }
            out += "\n" + table(title, rows, "Avg.");
        };
        section("Moderation", kModerationCategories, r.safety_summary->moderation);
        section("Perspective", kPerspectiveCategories, r.safety_summary->perspective);
    }
    for (const auto& w : r.warnings) out += "warning: " + w + "\n";
    return out;
}

} // namespace taleboard

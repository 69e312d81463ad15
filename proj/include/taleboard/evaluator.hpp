#pragma once

#include "taleboard/gateway.hpp"
#include "taleboard/session.hpp"
#include "taleboard/simulator.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace taleboard {

// ---- quality (LLM as judge) ----

enum class QualityMetric { ElementsRelevancy, NarrativeCoherence, EducationalValue };

inline constexpr std::array<QualityMetric, 3> kQualityMetrics = {
    QualityMetric::ElementsRelevancy, QualityMetric::NarrativeCoherence, QualityMetric::EducationalValue};

std::string_view quality_metric_name(QualityMetric metric); // "Elements Relevancy", ...

struct QualityAnswer {
    bool yes = false;
    std::optional<int> scale; // 1..5, present iff yes

    friend bool operator==(const QualityAnswer&, const QualityAnswer&) = default;
};

struct QualityScores {
    std::map<QualityMetric, QualityAnswer> answers; // all three metrics

    const QualityAnswer& at(QualityMetric metric) const { return answers.at(metric); }
    friend bool operator==(const QualityScores&, const QualityScores&) = default;
};

// The questionnaire put to the judge.
std::string questionnaire_text();

// Judge request for a story: questionnaire, story, selections and lessons in
// the user message; the three-line answer format in the system message.
PromptRequest judge_request(const Story& story, const std::vector<SelectionRow>& selections,
                            const std::vector<std::string>& lessons);

// Parses "Elements Relevancy: Yes, Scale: 5" style lines, one per metric.
// Throws ParseError when a metric is missing or malformed.
QualityScores parse_judge_output(std::string_view response);

// Asks the judge; a reply that breaks the format gets one corrective reprompt
// before ParseError. Throws Incomplete when the record has no full story.
QualityScores judge_quality(const SessionRecord& record, ChatBackend& judge, ExchangeLog* log = nullptr);

// ---- safety ----

inline const std::vector<std::string> kModerationCategories = {"Harassment", "Hate",   "Illicit",
                                                               "Self Harm",  "Sexual", "Violence"};
inline const std::vector<std::string> kPerspectiveCategories = {
    "Toxicity", "Identity Attack", "Severe Toxicity", "Profanity", "Threat", "Insult"};

struct SafetyScores {
    // Categories a provider did not report are absent, not zero.
    std::map<std::string, double> moderation;
    std::map<std::string, double> perspective;

    friend bool operator==(const SafetyScores&, const SafetyScores&) = default;
};

// Provider category name -> table row. Several provider categories may feed
// one row; the row takes the highest of them.
using CategoryMapping = std::map<std::string, std::string>;

struct SafetyMappings {
    CategoryMapping moderation;
    CategoryMapping perspective;

    static SafetyMappings defaults();
    // {"moderation": {...}, "perspective": {...}}; missing sections keep defaults.
    static SafetyMappings from_json(std::string_view json_text);
};

// Applies `mapping` to raw provider scores. Provider categories outside the
// mapping are ignored. Throws CategoryMappingError when nothing maps, or a
// score is not a number in [0,1].
std::map<std::string, double> map_categories(const std::map<std::string, double>& raw,
                                             const CategoryMapping& mapping,
                                             const std::vector<std::string>& rows);

class SafetyClient {
public:
    virtual ~SafetyClient() = default;
    virtual std::string name() const = 0;
    // Raw provider category scores for `text`.
    virtual std::map<std::string, double> score(const std::string& text) = 0;
};

// Returns the same scores for every text.
class FixedSafetyClient : public SafetyClient {
public:
    FixedSafetyClient(std::string name, std::map<std::string, double> scores);
    std::string name() const override { return name_; }
    std::map<std::string, double> score(const std::string& text) override;

private:
    std::string name_;
    std::map<std::string, double> scores_;
};

struct SafetyEndpoint {
    std::string url;
    std::string api_key;
    std::chrono::milliseconds timeout{30000};
};

// OpenAI-style moderation: POST {"input": text}, reads
// results[0].category_scores.
class ModerationClient : public SafetyClient {
public:
    explicit ModerationClient(SafetyEndpoint endpoint);
    std::string name() const override { return "moderation"; }
    std::map<std::string, double> score(const std::string& text) override;
    static std::optional<SafetyEndpoint> from_env(); // MODERATION_ENDPOINT / MODERATION_KEY

private:
    SafetyEndpoint endpoint_;
};

// Perspective comments:analyze: POST with requestedAttributes, reads
// attributeScores.<ATTR>.summaryScore.value.
class PerspectiveClient : public SafetyClient {
public:
    explicit PerspectiveClient(SafetyEndpoint endpoint);
    std::string name() const override { return "perspective"; }
    std::map<std::string, double> score(const std::string& text) override;
    static std::optional<SafetyEndpoint> from_env(); // PERSPECTIVE_ENDPOINT / PERSPECTIVE_KEY

private:
    SafetyEndpoint endpoint_;
};

struct SafetyOptions {
    SafetyMappings mappings = SafetyMappings::defaults();
    // Score each stage separately and keep the highest value per category,
    // instead of scoring the whole story at once.
    bool per_stage = false;
};

// Either client may be null; its category set is then left empty.
// Throws InvalidArgument for empty text.
SafetyScores score_safety(const std::string& story_text, SafetyClient* moderation,
                          SafetyClient* perspective, const SafetyOptions& options = {});
SafetyScores score_safety(const Story& story, SafetyClient* moderation, SafetyClient* perspective,
                          const SafetyOptions& options = {});

// ---- aggregation ----

struct Stat {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
    std::size_t n = 0;
};

// Throws EmptyInput for an empty list.
Stat aggregate(const std::vector<double>& values);

struct QualityAggregate {
    std::optional<Stat> scale; // over Yes answers; empty when there were none
    double yes_rate = 0.0;
    std::size_t answers = 0;
};

std::map<QualityMetric, QualityAggregate> aggregate(const std::vector<QualityScores>& scores);

struct SafetyAggregate {
    std::map<std::string, Stat> moderation;
    std::map<std::string, Stat> perspective;
};

SafetyAggregate aggregate(const std::vector<SafetyScores>& scores);

// "4.67 (±0.47)"; a zero deviation prints as "(±0.0)".
std::string format_quality_cell(const Stat& stat);
// "0.0519 (±0.0765)".
std::string format_safety_cell(const Stat& stat);

// ---- relevancy ----

struct RelevancyResult {
    SelectionRow row;
    bool found = false;
};

// For each selection: does its label, or the proper name given in its
// definition, appear in the story? Characters may appear in any stage; other
// elements must appear in their own stage. Matching is word based and
// tolerant of simple word-form changes.
std::vector<RelevancyResult> relevancy_check(const SessionRecord& record);
std::vector<RelevancyResult> relevancy_check(const std::vector<SelectionRow>& selections,
                                             const Story& story);

// ---- reports ----

struct EvaluationReport {
    std::size_t story_count = 0;
    std::size_t skipped = 0; // failed or incomplete records
    std::vector<std::int64_t> seeds;
    std::vector<QualityScores> quality;
    std::vector<SafetyScores> safety;
    std::vector<std::vector<RelevancyResult>> relevancy;
    std::map<QualityMetric, QualityAggregate> quality_summary;
    std::optional<SafetyAggregate> safety_summary;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> config;
};

struct EvaluateOptions {
    ChatBackend* judge = nullptr;
    SafetyClient* moderation = nullptr;
    SafetyClient* perspective = nullptr;
    SafetyOptions safety;
    bool run_safety = false;
    ExchangeLog* log = nullptr;
};

EvaluationReport evaluate_records(const std::vector<SessionRecord>& records, const EvaluateOptions& options);

// Reads every <dir>/*/record.json, ordered by seed.
std::vector<SessionRecord> load_records(const std::filesystem::path& runs_dir);

std::string report_to_json(const EvaluationReport& report);
// Aligned plain-text tables: quality metrics, then moderation and perspective
// categories.
std::string report_table(const EvaluationReport& report);

} // namespace taleboard

#pragma once

#include "taleboard/child_agent.hpp"
#include "taleboard/dialogue.hpp"
#include "taleboard/gateway.hpp"
#include "taleboard/session.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace taleboard {

inline constexpr int kDefaultTurnLimit = 200;

struct SessionRecord {
    Session session;
    std::vector<SelectionRow> selections;
    Story story; // parts are empty for stages never reached
    std::vector<ChatExchange> exchanges;
    std::int64_t seed = 0;
    double wall_time_s = 0.0;
    std::optional<std::string> error; // set when the run stopped early
    std::optional<Errc> error_code;
    std::vector<std::string> deviations;

    bool ok() const { return !error.has_value(); }
};

struct RunOptions {
    int turn_limit = kDefaultTurnLimit;
};

// Plays one session from Initiate to Done, alternating dialogue steps and
// child responses. A turn is one step call. Backend errors and running past
// the turn limit stop the run and are recorded in the returned record, which
// keeps everything produced so far. Exchanges go to `log` when given (the
// child agent may share it), otherwise to a private log.
SessionRecord run_session(const DialogueManager& dialogue, ChatBackend& tinker, ChildAgent& child,
                          const std::vector<std::string>& lessons, std::int64_t seed,
                          const RunOptions& options = {}, ExchangeLog* log = nullptr);

// Same as run_session but throws instead of recording the failure:
// TurnLimitExceeded, or the backend's error code.
SessionRecord run_session_or_throw(const DialogueManager& dialogue, ChatBackend& tinker,
                                   ChildAgent& child, const std::vector<std::string>& lessons,
                                   std::int64_t seed, const RunOptions& options = {},
                                   ExchangeLog* log = nullptr);

// Builds the backends for one seed. Each session gets its own instances, so
// sessions never share mutable state.
struct AgentPair {
    std::unique_ptr<ChatBackend> tinker;
    std::unique_ptr<ChatBackend> child_backend; // owned here when the child needs one
    std::unique_ptr<ChildAgent> child;
};
using AgentFactory = std::function<AgentPair(std::int64_t seed, ExchangeLog* log)>;

AgentFactory template_scripted_factory(PhraseBank bank = default_phrase_bank(),
                                       ElementCatalog catalog = default_catalog());

struct BatchConfig {
    std::vector<std::string> lessons;
    AgentFactory agents;
    RunOptions run;
    int jobs = 1; // sessions run concurrently
    // When set, each record is written to <output_dir>/<seed>/.
    std::optional<std::filesystem::path> output_dir;
};

// Runs seeds base_seed .. base_seed+n-1. Failed sessions are kept in the
// result with their error; records come back in seed order.
std::vector<SessionRecord> run_batch(const DialogueManager& dialogue, int n, std::int64_t base_seed,
                                     const BatchConfig& config);

// Writes session.json, exchanges.jsonl, story.txt and record.json to `dir`.
void write_record(const SessionRecord& record, const std::filesystem::path& dir);
SessionRecord read_record(const std::filesystem::path& dir);

std::string record_to_json(const SessionRecord& record);
SessionRecord record_from_json(std::string_view json_text);

// Checks the record against its own session: rows must derive from the
// session, and a successful record has 15 rows and four non-empty parts.
std::optional<std::string> check_record(const SessionRecord& record);

} // namespace taleboard

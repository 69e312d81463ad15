#include "taleboard/simulator.hpp"

#include "taleboard/error.hpp"
#include "taleboard/persistence.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

namespace taleboard {

using nlohmann::json;

namespace {

Story partial_story(const Session& s) {
    Story story;
    for (std::size_t i = 0; i < kStages.size(); ++i) {
        auto it = s.story_parts.find(kStages[i]);
        if (it != s.story_parts.end()) story.parts[i] = it->second;
    }
    return story;
}

struct RunFailure {
    Errc code;
    std::string message;
};

SessionRecord run_impl(const DialogueManager& dialogue, ChatBackend& tinker, ChildAgent& child,
                       const std::vector<std::string>& lessons, std::int64_t seed,
                       const RunOptions& options, ExchangeLog* shared_log,
                       std::optional<RunFailure>& failure) {
    ExchangeLog private_log;
    ExchangeLog* log = shared_log ? shared_log : &private_log;
    const std::size_t log_start = log->size();
    const auto started = std::chrono::steady_clock::now();

    SessionRecord record;
    record.seed = seed;
    record.session = new_session(lessons, seed, "sim-" + std::to_string(seed));

    int turns = 0;
    std::string utterance;
    auto take_turn = [&](const StepInput& input) {
        if (turns >= options.turn_limit) {
            throw Error(Errc::TurnLimitExceeded, "session did not finish within " +
                                                     std::to_string(options.turn_limit) + " turns");
        }
        ++turns;
        StepOutcome out = dialogue.step(record.session, input, tinker, log);
        record.session = std::move(out.session);
        utterance = std::move(out.agent_utterance);
    };

    try {
        take_turn(Bootstrap{});
        while (!record.session.pointer.is_done()) {
            const Expectation expects = expected_input(record.session.pointer);
            const InputEvent answer = child.respond(utterance, expects);
            const StepInput input = std::visit([](const auto& e) -> StepInput { return e; }, answer);
            try {
                take_turn(input);
            } catch (const Error& e) {
                if (e.code() != Errc::WrongInputKind && e.code() != Errc::InvalidOption) throw;
                // The child broke protocol; the session is unchanged, so ask again.
                record.deviations.push_back(record.session.pointer.name() + ": " + e.what());
            }
        }
    } catch (const Error& e) {
        failure = RunFailure{e.code(), e.what()};
    }

    const auto all = log->entries();
    record.exchanges.assign(all.begin() + static_cast<std::ptrdiff_t>(std::min(log_start, all.size())),
                            all.end());
    record.selections = selections_table(record.session);
    record.story = partial_story(record.session);
    for (auto& d : child.deviations()) record.deviations.push_back(d);
    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (failure) {
        record.error = failure->message;
        record.error_code = failure->code;
    }
    return record;
}

json rows_json(const std::vector<SelectionRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"stage", r.stage}, {"element", r.element}, {"selection", r.selection},
                       {"definition", r.definition}});
    }
    return out;
}

} // namespace

SessionRecord run_session(const DialogueManager& dialogue, ChatBackend& tinker, ChildAgent& child,
                          const std::vector<std::string>& lessons, std::int64_t seed,
                          const RunOptions& options, ExchangeLog* log) {
    std::optional<RunFailure> failure;
    return run_impl(dialogue, tinker, child, lessons, seed, options, log, failure);
}

SessionRecord run_session_or_throw(const DialogueManager& dialogue, ChatBackend& tinker,
                                   ChildAgent& child, const std::vector<std::string>& lessons,
                                   std::int64_t seed, const RunOptions& options, ExchangeLog* log) {
    std::optional<RunFailure> failure;
    SessionRecord record = run_impl(dialogue, tinker, child, lessons, seed, options, log, failure);
    if (failure) throw Error(failure->code, failure->message);
    return record;
}

AgentFactory template_scripted_factory(PhraseBank bank, ElementCatalog catalog) {
    return [bank = std::move(bank), catalog = std::move(catalog)](std::int64_t seed, ExchangeLog*) {
        AgentPair pair;
        pair.tinker = std::make_unique<TemplateBackend>();
        pair.child = std::make_unique<ScriptedChild>(static_cast<std::uint64_t>(seed), bank, catalog);
        return pair;
    };
}

std::vector<SessionRecord> run_batch(const DialogueManager& dialogue, int n, std::int64_t base_seed,
                                     const BatchConfig& config) {
    if (n < 1) throw Error(Errc::InvalidArgument, "batch size must be at least 1");
    if (!config.agents) throw Error(Errc::InvalidArgument, "batch needs an agent factory");

    std::vector<SessionRecord> records(static_cast<std::size_t>(n));
    auto run_one = [&](std::size_t i) {
        const std::int64_t seed = base_seed + static_cast<std::int64_t>(i);
        ExchangeLog log;
        SessionRecord record;
        try {
            AgentPair agents = config.agents(seed, &log);
            record = run_session(dialogue, *agents.tinker, *agents.child, config.lessons, seed,
                                 config.run, &log);
        } catch (const Error& e) {
            record.seed = seed;
            record.error = e.what();
            record.error_code = e.code();
        }
        if (config.output_dir) write_record(record, *config.output_dir / std::to_string(seed));
        records[i] = std::move(record);
    };

    const int jobs = std::max(1, std::min(config.jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < records.size(); ++i) run_one(i);
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::mutex error_mutex;
    std::exception_ptr first_error;
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
                try {
                    run_one(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return records;
}

std::string record_to_json(const SessionRecord& r) {
    json exchanges = json::array();
    for (const auto& e : r.exchanges) exchanges.push_back(json::parse(ExchangeLog::to_jsonl_line(e)));
    json doc = {{"schema_version", kSchemaVersion},
                {"seed", r.seed},
                {"wall_time_s", r.wall_time_s},
                {"status", r.ok() ? "ok" : "failed"},
                {"error", r.error ? json(*r.error) : json(nullptr)},
                {"error_code", r.error_code ? json(std::string(errc_name(*r.error_code))) : json(nullptr)},
                {"selections", rows_json(r.selections)},
                {"story", r.story.parts},
                {"deviations", r.deviations},
                {"session", json::parse(session_to_json(r.session))},
                {"exchanges", exchanges}};
    return doc.dump(2, ' ', false, json::error_handler_t::replace);
}

SessionRecord record_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("record is not valid JSON: ") + e.what());
    }
    if (doc.value("schema_version", 0) != kSchemaVersion) {
        throw Error(Errc::SchemaVersionMismatch, "record schema_version must be " + std::to_string(kSchemaVersion));
    }
    try {
        SessionRecord r;
        r.seed = doc.at("seed").get<std::int64_t>();
        r.wall_time_s = doc.at("wall_time_s").get<double>();
        if (!doc.at("error").is_null()) r.error = doc.at("error").get<std::string>();
        if (!doc.at("error_code").is_null()) {
            const auto name = doc.at("error_code").get<std::string>();
            for (int c = 0; c <= static_cast<int>(Errc::IoError); ++c) {
                if (errc_name(static_cast<Errc>(c)) == name) r.error_code = static_cast<Errc>(c);
            }
        }
        for (const auto& row : doc.at("selections")) {
            r.selections.push_back({row.at("stage").get<std::string>(), row.at("element").get<std::string>(),
                                    row.at("selection").get<std::string>(),
                                    row.at("definition").get<std::string>()});
        }
        r.story.parts = doc.at("story").get<std::array<std::string, 4>>();
        r.deviations = doc.at("deviations").get<std::vector<std::string>>();
        r.session = session_from_json(doc.at("session").dump());
        for (const auto& e : doc.at("exchanges")) r.exchanges.push_back(ExchangeLog::from_jsonl_line(e.dump()));
        return r;
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed record: ") + e.what());
    }
}

void write_record(const SessionRecord& record, const std::filesystem::path& dir) {
    std::string exchanges;
    for (const auto& e : record.exchanges) exchanges += ExchangeLog::to_jsonl_line(e) + "\n";
    write_file_atomic(dir / "session.json", session_to_json(record.session));
    write_file_atomic(dir / "exchanges.jsonl", exchanges);
    write_file_atomic(dir / "story.txt", record.story.text() + "\n");
    write_file_atomic(dir / "record.json", record_to_json(record));
}

SessionRecord read_record(const std::filesystem::path& dir) {
    return record_from_json(read_file(dir / "record.json"));
}

std::optional<std::string> check_record(const SessionRecord& record) {
    if (auto broken = check_invariants(record.session)) return broken;
    if (record.selections != selections_table(record.session)) {
        return "selection rows do not match the session's selections";
    }
    if (!record.ok()) return std::nullopt;
    if (record.selections.size() != 15) {
        return "expected 15 selection rows, found " + std::to_string(record.selections.size());
    }
    for (std::size_t i = 0; i < record.story.parts.size(); ++i) {
        if (record.story.parts[i].empty()) return "story part " + std::to_string(i + 1) + " is empty";
    }
    return std::nullopt;
}

} // namespace taleboard

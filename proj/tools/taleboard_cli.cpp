// taleboard command line: play, simulate, evaluate, extract, serve.

#include "taleboard/catalog.hpp"
#include "taleboard/child_agent.hpp"
#include "taleboard/dialogue.hpp"
#include "taleboard/error.hpp"
#include "taleboard/evaluator.hpp"
#include "taleboard/gateway.hpp"
#include "taleboard/persistence.hpp"
#include "taleboard/service.hpp"
#include "taleboard/simulator.hpp"
#include "taleboard/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <iostream>

namespace fs = std::filesystem;
using namespace taleboard;

namespace {

const std::vector<std::string> kDefaultLessons = {"Do not lie", "Get along with friends"};

struct Globals {
    std::string templates;
    std::string catalog;
};

DialogueManager make_dialogue(const Globals& g) {
    ElementCatalog catalog = g.catalog.empty() ? default_catalog() : ElementCatalog::load(g.catalog);
    PromptCatalog prompts = g.templates.empty() ? default_prompt_catalog() : PromptCatalog::load(g.templates);
    return DialogueManager(std::move(catalog), std::move(prompts));
}

LiveConfig live_config_or_throw(double temperature) {
    auto cfg = LiveConfig::from_env();
    if (!cfg) {
        throw Error(Errc::InvalidArgument, "live backend needs CHAT_ENDPOINT and CHAT_MODEL in the environment");
    }
    cfg->temperature = temperature;
    return *cfg;
}

std::unique_ptr<ChatBackend> make_backend(const std::string& kind, double temperature = 0.7) {
    if (kind == "template") return std::make_unique<TemplateBackend>();
    if (kind == "live") return std::make_unique<LiveBackend>(live_config_or_throw(temperature));
    throw Error(Errc::InvalidArgument, "unknown backend \"" + kind + "\"");
}

// ---- play ----

struct PlayArgs {
    std::vector<std::string> lessons = kDefaultLessons;
    std::string backend = "template";
    std::string store;
    std::string title;
};

int run_play(const Globals& g, const PlayArgs& a) {
    const DialogueManager dialogue = make_dialogue(g);
    auto backend = make_backend(a.backend);
    Session session = new_session(a.lessons);

    auto out = dialogue.step(session, Bootstrap{}, *backend);
    session = out.session;
    std::cout << "Tinker: " << out.agent_utterance << "\n";

    std::string line;
    while (!session.pointer.is_done()) {
        const Expectation expects = expected_input(session.pointer);
        std::cout << "[" << session.pointer.name() << "] "
                  << (expects.kind == Expectation::Kind::Scan
                          ? "scan a " + std::string(element_type_name(expects.element)) + " token"
                          : std::string("say something"))
                  << "> " << std::flush;
        if (!std::getline(std::cin, line)) {
            std::cout << "\n";
            return 0;
        }
        if (line == ":quit") return 0;
        StepInput input = SpeechEvent{line};
        if (expects.kind == Expectation::Kind::Scan) input = ScanEvent{expects.element, text::trim(line)};
        try {
            out = dialogue.step(session, input, *backend);
        } catch (const Error& e) {
            if (e.code() == Errc::InvalidOption) {
                std::cout << "! " << e.what() << ". Options: "
                          << text::join(dialogue.catalog().options(expects.element), ", ") << "\n";
                continue;
            }
            if (is_backend_error(e.code())) {
                std::cout << "! backend error: " << e.what() << " (try again)\n";
                continue;
            }
            throw;
        }
        session = out.session;
        std::cout << "Tinker: " << out.agent_utterance << "\n";
    }

    if (!a.store.empty()) {
        Store store(a.store);
        store.save_session(session);
        if (!a.title.empty()) std::cout << "saved story " << store.save_story(session, a.title) << "\n";
    }
    return 0;
}

// ---- simulate ----

struct SimulateArgs {
    int n = 1;
    std::int64_t seed = 1;
    std::string tinker = "template";
    std::string child = "scripted";
    std::string out = "runs";
    std::string batch_id;
    int jobs = 1;
    int turn_limit = kDefaultTurnLimit;
    std::vector<std::string> lessons = kDefaultLessons;
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
    const DialogueManager dialogue = make_dialogue(g);
    if (a.tinker != "template" && a.tinker != "live") throw Error(Errc::InvalidArgument, "unknown tinker backend");
    if (a.child != "scripted" && a.child != "live") throw Error(Errc::InvalidArgument, "unknown child backend");
    // Fail on missing configuration before any session starts.
    if (a.tinker == "live" || a.child == "live") live_config_or_throw(0.7);

    BatchConfig config;
    config.lessons = a.lessons;
    config.jobs = a.jobs;
    config.run.turn_limit = a.turn_limit;
    const std::string batch = a.batch_id.empty()
                                  ? "s" + std::to_string(a.seed) + "-n" + std::to_string(a.n)
                                  : a.batch_id;
    config.output_dir = fs::path(a.out) / batch;
    const ElementCatalog catalog = dialogue.catalog();
    config.agents = [&a, catalog](std::int64_t seed, ExchangeLog* log) {
        AgentPair pair;
        pair.tinker = make_backend(a.tinker);
        if (a.child == "live") {
            pair.child_backend = make_backend("live");
            pair.child = std::make_unique<LlmRolePlayer>(*pair.child_backend, static_cast<std::uint64_t>(seed),
                                                         catalog, log);
        } else {
            pair.child = std::make_unique<ScriptedChild>(static_cast<std::uint64_t>(seed), default_phrase_bank(),
                                                         catalog);
        }
        return pair;
    };

    const auto records = run_batch(dialogue, a.n, a.seed, config);
    int failed = 0;
    for (const auto& r : records) {
        std::cout << "seed " << r.seed << ": " << (r.ok() ? "ok" : "failed: " + *r.error) << " ("
                  << r.session.pointer.name() << ", " << r.exchanges.size() << " exchanges)\n";
        failed += !r.ok();
    }
    std::cout << "wrote " << records.size() << " sessions to " << config.output_dir->string() << "\n";
    return failed ? 1 : 0;
}

// ---- evaluate ----

struct EvaluateArgs {
    std::string runs;
    bool judge = false;
    std::string judge_backend = "template";
    bool safety = false;
    std::string mock_safety;
    std::string mapping;
    bool per_stage = false;
};

int run_evaluate(const EvaluateArgs& a) {
    const auto records = load_records(a.runs);
    if (records.empty()) throw Error(Errc::EmptyInput, "no records under " + a.runs);

    EvaluateOptions options;
    std::unique_ptr<ChatBackend> judge;
    if (a.judge) {
        judge = make_backend(a.judge_backend, 0.0);
        options.judge = judge.get();
    }
    std::unique_ptr<SafetyClient> moderation, perspective;
    if (a.safety) {
        options.run_safety = true;
        if (!a.mock_safety.empty()) {
            const auto doc = nlohmann::json::parse(read_file(a.mock_safety));
            moderation = std::make_unique<FixedSafetyClient>(
                "mock-moderation", doc.value("moderation", std::map<std::string, double>{}));
            perspective = std::make_unique<FixedSafetyClient>(
                "mock-perspective", doc.value("perspective", std::map<std::string, double>{}));
        } else {
            if (auto ep = ModerationClient::from_env()) moderation = std::make_unique<ModerationClient>(*ep);
            if (auto ep = PerspectiveClient::from_env()) perspective = std::make_unique<PerspectiveClient>(*ep);
        }
        options.moderation = moderation.get();
        options.perspective = perspective.get();
        if (!a.mapping.empty()) options.safety.mappings = SafetyMappings::from_json(read_file(a.mapping));
        options.safety.per_stage = a.per_stage;
    }

    const auto report = evaluate_records(records, options);
    write_file_atomic(fs::path(a.runs) / "report.json", report_to_json(report));
    const std::string table = report_table(report);
    write_file_atomic(fs::path(a.runs) / "report.txt", table);
    std::cout << table;
    return 0;
}

// ---- extract ----

struct ExtractArgs {
    std::string corpus;
    std::string out;
    std::string backend = "live";
    int limit = 0;
};

int run_extract(const ExtractArgs& a) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.corpus)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (a.limit > 0 && files.size() > static_cast<std::size_t>(a.limit)) files.resize(a.limit);
    if (files.empty()) throw Error(Errc::EmptyInput, "no .txt stories under " + a.corpus);

    auto backend = make_backend(a.backend, 0.0);
    std::vector<ExtractionResult> results;
    nlohmann::json lessons = nlohmann::json::array();
    for (const auto& f : files) {
        try {
            auto r = extract_elements(read_file(f), *backend);
            for (const auto& w : r.warnings) std::cerr << f.filename().string() << ": " << w << "\n";
            if (!r.lesson.empty()) lessons.push_back(r.lesson);
            results.push_back(std::move(r));
        } catch (const Error& e) {
            if (is_backend_error(e.code()) && e.code() != Errc::BadResponse) throw;
            std::cerr << f.filename().string() << ": skipped (" << e.what() << ")\n";
        }
    }
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [type, labels] : merge_extractions(results)) doc[std::string(element_type_name(type))] = labels;
    doc["lessons"] = lessons;
    const std::string body = doc.dump(2);
    if (a.out.empty()) std::cout << body << "\n";
    else write_file_atomic(a.out, body + "\n");
    std::cerr << "extracted from " << results.size() << " of " << files.size() << " stories\n";
    return 0;
}

// ---- serve ----

struct ServeArgs {
    int port = 8080;
    std::string host = "0.0.0.0";
    std::string store = "taleboard-data";
    std::string static_dir;
    std::string backend = "template";
    std::string busy = "wait";
};

int run_serve(const Globals& g, const ServeArgs& a) {
    Store store(a.store);
    std::shared_ptr<ChatBackend> backend = make_backend(a.backend);
    StoryService service(make_dialogue(g), backend, store,
                         a.busy == "reject" ? BusyPolicy::Reject : BusyPolicy::Wait);
    ServeOptions options;
    options.host = a.host;
    options.port = a.port;
    if (!a.static_dir.empty()) options.static_dir = a.static_dir;
    std::signal(SIGINT, [](int) { stop_serving(); });
    std::signal(SIGTERM, [](int) { stop_serving(); });
    const std::string host = a.host;
    options.on_listening = [host](int port) { std::cerr << "listening on " << host << ":" << port << std::endl; };
    if (!serve(service, options)) {
        std::cerr << "error: cannot listen on " << a.host << ":" << a.port << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive storytelling engine"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--templates", g.templates, "Prompt templates JSON (default: built in)")->check(CLI::ExistingFile);
    app.add_option("--catalog", g.catalog, "Element catalog JSON (default: built in)")->check(CLI::ExistingFile);

    PlayArgs play;
    auto* play_cmd = app.add_subcommand("play", "Play in the terminal; type token names to scan");
    play_cmd->add_option("--lesson", play.lessons, "Lesson (repeatable)");
    play_cmd->add_option("--backend", play.backend, "template or live")->check(CLI::IsMember({"template", "live"}));
    play_cmd->add_option("--store", play.store, "Store directory for the finished session");
    play_cmd->add_option("--title", play.title, "Save the finished story under this title");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run simulated sessions");
    sim_cmd->add_option("--n", sim.n, "Number of sessions")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "First seed");
    sim_cmd->add_option("--tinker-backend", sim.tinker, "template or live")->check(CLI::IsMember({"template", "live"}));
    sim_cmd->add_option("--child-backend", sim.child, "scripted or live")->check(CLI::IsMember({"scripted", "live"}));
    sim_cmd->add_option("--out", sim.out, "Runs directory");
    sim_cmd->add_option("--batch-id", sim.batch_id, "Batch directory name (default s<seed>-n<n>)");
    sim_cmd->add_option("--jobs", sim.jobs, "Sessions run in parallel")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--turn-limit", sim.turn_limit, "Turns per session")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--lesson", sim.lessons, "Lesson (repeatable)");

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score a batch of simulated sessions");
    ev_cmd->add_option("--runs", ev.runs, "Batch directory")->required()->check(CLI::ExistingDirectory);
    ev_cmd->add_flag("--judge", ev.judge, "Run the quality questionnaire");
    ev_cmd->add_option("--judge-backend", ev.judge_backend, "template or live")
        ->check(CLI::IsMember({"template", "live"}));
    ev_cmd->add_flag("--safety", ev.safety, "Run safety scoring");
    ev_cmd->add_option("--mock-safety", ev.mock_safety, "Fixed safety scores JSON")->check(CLI::ExistingFile);
    ev_cmd->add_option("--mapping", ev.mapping, "Provider category mapping JSON")->check(CLI::ExistingFile);
    ev_cmd->add_flag("--per-stage", ev.per_stage, "Score each stage and keep the highest value");

    ExtractArgs ex;
    auto* ex_cmd = app.add_subcommand("extract", "Extract element options from a story corpus");
    ex_cmd->add_option("--corpus", ex.corpus, "Directory of .txt stories")->required()->check(CLI::ExistingDirectory);
    ex_cmd->add_option("--out", ex.out, "Output JSON (default stdout)");
    ex_cmd->add_option("--limit", ex.limit, "Use at most this many stories");
    ex_cmd->add_option("--backend", ex.backend, "template or live")->check(CLI::IsMember({"template", "live"}));

    ServeArgs srv;
    auto* srv_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    srv_cmd->add_option("--port", srv.port, "Port");
    srv_cmd->add_option("--host", srv.host, "Bind address");
    srv_cmd->add_option("--store", srv.store, "Store directory");
    srv_cmd->add_option("--static", srv.static_dir, "Static files served at /")->check(CLI::ExistingDirectory);
    srv_cmd->add_option("--backend", srv.backend, "template or live")->check(CLI::IsMember({"template", "live"}));
    srv_cmd->add_option("--busy", srv.busy, "wait or reject")->check(CLI::IsMember({"wait", "reject"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*play_cmd) return run_play(g, play);
        if (*sim_cmd) return run_simulate(g, sim);
        if (*ev_cmd) return run_evaluate(ev);
        if (*ex_cmd) return run_extract(ex);
        if (*srv_cmd) return run_serve(g, srv);
    } catch (const Error& e) {
        std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

// Acceptance checks: one PASS/FAIL line per check, each with a runtime limit.
// Exit status is non-zero when any gating check fails.

#include "support.hpp"

#include "taleboard/error.hpp"
#include "taleboard/evaluator.hpp"
#include "taleboard/persistence.hpp"
#include "taleboard/simulator.hpp"
#include "taleboard/text.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

using namespace taleboard;
namespace fs = std::filesystem;

namespace {

// Thrown by expect() to end a check with a reason.
struct CheckFailed {
    std::string reason;
};

void expect(bool condition, const std::string& reason) {
    if (!condition) throw CheckFailed{reason};
}

struct Check {
    std::string id;
    std::string title;
    double limit_s;
    std::function<void()> body;
    bool gating = true;
};

enum class Outcome { Pass, Fail, Skip };

struct Skipped {
    std::string reason;
};

Outcome run_check(const Check& c) {
    const auto started = std::chrono::steady_clock::now();
    std::string detail;
    Outcome outcome = Outcome::Pass;
    try {
        c.body();
    } catch (const CheckFailed& f) {
        outcome = Outcome::Fail;
        detail = f.reason;
    } catch (const Skipped& s) {
        outcome = Outcome::Skip;
        detail = s.reason;
    } catch (const std::exception& e) {
        outcome = Outcome::Fail;
        detail = std::string("unexpected error: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (outcome == Outcome::Pass && elapsed > c.limit_s) {
        outcome = Outcome::Fail;
        detail = "over the time limit";
    }
    const char* word = outcome == Outcome::Pass ? "PASS" : outcome == Outcome::Fail ? "FAIL" : "SKIP";
    char timing[96];
    std::snprintf(timing, sizeof timing, "(%.3f s, limit %g s)", elapsed, c.limit_s);
    std::cout << word << " " << c.id << " " << c.title << " " << timing;
    if (!c.gating) std::cout << " [not gating]";
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << std::endl;
    return outcome;
}

const std::vector<std::string> kLessons{"Do not lie", "Get along with friends"};

// ---- checks ----

void state_machine_conformance() {
    const auto t = tbtest::recorded_session();
    const auto dm = tbtest::recorded_dialogue();
    ScriptedBackend backend(tbtest::recorded_responses(t, tbtest::recorded_story()));
    Session s = new_session(t.lessons, 1, "acceptance");
    std::vector<Pointer> visited;
    for (const auto& input : tbtest::recorded_inputs(t)) {
        visited.push_back(s.pointer);
        s = dm.step(s, input, backend).session;
    }
    const auto all = all_pointers();
    expect(visited.size() == 45, "visited " + std::to_string(visited.size()) + " pointers, expected 45");
    for (std::size_t i = 0; i < visited.size(); ++i) {
        expect(visited[i] == all[i], "step " + std::to_string(i) + " was at " + visited[i].name() + ", expected " +
                                         all[i].name());
    }
    expect(s.pointer.is_done(), "session ended at " + s.pointer.name());
    const auto rows = selections_table(s);
    expect(rows.size() == 15, std::to_string(rows.size()) + " selection rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        expect(rows[i] == t.rows[i], "row " + std::to_string(i + 1) + " (" + rows[i].stage + " " + rows[i].element +
                                         ") differs from the recorded table");
    }
}

void golden_prompts() {
    const auto t = tbtest::recorded_session();
    const auto dm = tbtest::recorded_dialogue();
    ScriptedBackend backend(tbtest::recorded_responses(t, tbtest::recorded_story()));
    Session s = new_session(t.lessons, 1, "golden");
    for (const auto& input : tbtest::recorded_inputs(t)) s = dm.step(s, input, backend).session;
    std::map<std::string, std::string> sent;
    for (const auto& r : backend.received()) sent[r.tag] = r.user;

    int checked = 0;
    bool saw_lessons_join = false;
    for (const auto& tmpl : default_prompt_catalog().templates()) {
        if (tmpl.provenance != Provenance::Verbatim) continue;
        const std::string name = tmpl.pointer.name();
        expect(sent.count(name) == 1, "no prompt was sent at " + name);
        std::string file = name;
        std::replace(file.begin(), file.end(), ':', '_');
        const std::string golden = tbtest::slurp(tbtest::source_path("tests/golden/prompts/" + file + ".txt"));
        expect(sent.at(name) == golden, "prompt at " + name + " differs from its golden file");
        expect(sent.at(name).find("${") == std::string::npos, "placeholder left in " + name);
        saw_lessons_join |= sent.at(name).find("Lessons: [Do not lie, Get along with friends]") != std::string::npos;
        ++checked;
    }
    expect(checked == 19, std::to_string(checked) + " verbatim templates checked, expected 19");
    expect(saw_lessons_join, "no golden shows the \"Lessons: [a, b]\" format");
}

void determinism(const std::string& cli) {
    expect(!cli.empty(), "the CLI path was not given (--cli)");
    const fs::path root = fs::temp_directory_path() / "taleboard_acceptance_determinism";
    fs::remove_all(root);
    auto run = [&](const std::string& out) {
        const std::string cmd = "\"" + cli + "\" simulate --n 5 --seed 11 --out \"" + (root / out).string() +
                                "\" > /dev/null";
        expect(std::system(cmd.c_str()) == 0, "command failed: " + cmd);
    };
    run("a");
    run("b");
    int compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (entry.path().filename() != "session.json") continue;
        const fs::path twin = root / "b" / fs::relative(entry.path(), root / "a");
        expect(fs::exists(twin), "second run lacks " + twin.string());
        expect(read_file(entry.path()) == read_file(twin), "session files differ: " + twin.string());
        ++compared;
    }
    fs::remove_all(root);
    expect(compared == 5, std::to_string(compared) + " session files compared, expected 5");
}

void story_assembly() {
    const auto t = tbtest::recorded_session();
    const auto story = tbtest::recorded_story();
    const auto dm = tbtest::recorded_dialogue();
    ScriptedBackend backend(tbtest::recorded_responses(t, story));
    Session s = new_session(t.lessons, 1, "assembly");
    int completes = 0;
    for (const auto& input : tbtest::recorded_inputs(t)) {
        if (s.pointer.phase() == Phase::Complete) {
            const auto k = static_cast<std::size_t>(*s.pointer.stage());
            std::string prefix;
            for (std::size_t i = 0; i < k; ++i) prefix += (i ? "\n\n" : "") + story[i];
            expect(story_so_far(s) == prefix, "story_so_far at " + s.pointer.name() + " is not the prefix");
            ++completes;
        }
        s = dm.step(s, input, backend).session;
    }
    expect(completes == 4, "visited " + std::to_string(completes) + " Complete states");
    const Story full = full_story(s);
    expect(full.parts == story, "full_story parts differ from the recorded stage texts");
    expect(full.text() == story[0] + "\n\n" + story[1] + "\n\n" + story[2] + "\n\n" + story[3],
           "full story text is not the concatenation of the stage texts");
}

void relevancy_oracle() {
    const auto t = tbtest::recorded_session();
    const auto results = relevancy_check(t.rows, Story{tbtest::recorded_story()});
    expect(results.size() == 15, std::to_string(results.size()) + " results");
    for (const auto& r : results) expect(r.found, r.row.selection + " was not found in the story");

    auto parts = tbtest::recorded_story();
    text::replace_all(parts[3], "boots", "shoes");
    int missing = 0;
    std::string which;
    for (const auto& r : relevancy_check(t.rows, Story{parts})) {
        if (!r.found) {
            ++missing;
            which = r.row.selection;
        }
    }
    expect(missing == 1 && which == "Boots",
           "negative control reported " + std::to_string(missing) + " missing elements");
}

void aggregation_oracle() {
    const Stat a = aggregate({4, 5, 5});
    expect(std::abs(a.mean - 4.6667) < 1e-4 && std::abs(a.mean - 14.0 / 3.0) < 1e-9, "mean of [4,5,5]");
    expect(std::abs(a.std - 0.4714) < 1e-4, "population std of [4,5,5]");
    const Stat fives = aggregate(std::vector<double>(30, 5.0));
    const std::string cell = format_quality_cell(fives);
    expect(cell == "5.00 (\xC2\xB1" "0.0)", "thirty 5s formatted as \"" + cell + "\"");
}

void safety_pipeline() {
    BatchConfig config;
    config.lessons = kLessons;
    config.agents = template_scripted_factory();
    const auto records = run_batch(DialogueManager(), 30, 1, config);
    for (const auto& r : records) expect(r.ok(), "fixture story " + std::to_string(r.seed) + " failed");

    std::map<std::string, double> mod;
    for (const auto& c : kModerationCategories) mod[c] = 0.0001;
    mod["Violence"] = 0.0519;
    std::map<std::string, double> persp;
    for (const auto& c : kPerspectiveCategories) persp[c] = 0.01;
    FixedSafetyClient moderation("moderation", mod);
    FixedSafetyClient perspective("perspective", persp);
    EvaluateOptions options;
    options.run_safety = true;
    options.moderation = &moderation;
    options.perspective = &perspective;
    const auto report = evaluate_records(records, options);
    expect(report.story_count == 30, std::to_string(report.story_count) + " stories scored");
    const std::string table = report_table(report);
    bool found = false;
    for (const auto& line : text::split(table, '\n')) {
        if (text::starts_with(line, "Violence ")) {
            found = text::trim(line.substr(8)) == "0.0519 (\xC2\xB1" "0.0000)";
        }
    }
    expect(found, "Violence row does not read 0.0519 (\xC2\xB1" "0.0000)");
    for (const auto& c : kModerationCategories) expect(table.find(c) != std::string::npos, c + " row missing");
    for (const auto& c : kPerspectiveCategories) expect(table.find(c) != std::string::npos, c + " row missing");

    for (double bad : {1.2, -0.01, std::nan("")}) {
        auto scores = mod;
        scores["Violence"] = bad;
        FixedSafetyClient broken("moderation", scores);
        options.moderation = &broken;
        bool rejected = false;
        try {
            evaluate_records(records, options);
        } catch (const Error& e) {
            rejected = e.code() == Errc::CategoryMappingError;
        }
        expect(rejected, "a mock score of " + std::to_string(bad) + " was accepted");
    }
}

// A step input that the session at `s` must reject.
StepInput invalid_input(const DialogueManager& dm, const Session& s, std::mt19937_64& rng) {
    const Expectation e = expected_input(s.pointer);
    while (true) {
        StepInput in;
        switch (rng() % 4) {
        case 0: in = Bootstrap{}; break;
        case 1: in = SpeechEvent{tbtest::random_text(rng)}; break;
        case 2: {
            const auto type = kElementTypes[rng() % 4];
            const auto& options = dm.catalog().options(type);
            in = ScanEvent{type, options[rng() % options.size()]};
            break;
        }
        default: in = ScanEvent{kElementTypes[rng() % 4], tbtest::random_text(rng, 4)}; break;
        }
        bool valid = false;
        if (e.kind == Expectation::Kind::Bootstrap) valid = std::holds_alternative<Bootstrap>(in);
        if (e.kind == Expectation::Kind::Speech) valid = std::holds_alternative<SpeechEvent>(in);
        if (e.kind == Expectation::Kind::Scan) {
            const auto* scan = std::get_if<ScanEvent>(&in);
            valid = scan && scan->type == e.element && dm.catalog().validate_option(scan->type, scan->text);
        }
        if (!valid) return in;
    }
}

void atomicity() {
    const DialogueManager dm;
    std::mt19937_64 rng(8);
    std::vector<Session> states;
    for (int i = 0; i < 200; ++i) states.push_back(tbtest::random_session(dm, rng));
    for (Pointer p : all_pointers()) states.push_back(tbtest::reachable_session(dm, 3, p.ordinal()));

    ScriptedBackend never({});
    for (int i = 0; i < 10000; ++i) {
        const Session& s = states[rng() % states.size()];
        const Session before = s;
        const std::string before_json = session_to_json(s);
        const StepInput in = invalid_input(dm, s, rng);
        Errc code = Errc::InvalidArgument;
        bool threw = false;
        try {
            dm.step(s, in, never);
        } catch (const Error& e) {
            threw = true;
            code = e.code();
        }
        expect(threw, "an invalid " + describe(in) + " was accepted at " + s.pointer.name());
        expect(code == Errc::WrongInputKind || code == Errc::InvalidOption,
               "unexpected error " + std::string(errc_name(code)) + " at " + s.pointer.name());
        expect(s == before && session_to_json(s) == before_json, "session changed at " + s.pointer.name());
    }
    expect(never.received().empty(), "the backend was called for an invalid event");
}

void persistence_round_trip() {
    const DialogueManager dm;
    std::mt19937_64 rng(9);
    const fs::path root = fs::temp_directory_path() / "taleboard_acceptance_store";
    fs::remove_all(root);
    Store store(root);
    for (int i = 0; i < 1000; ++i) {
        Session s = tbtest::random_session(dm, rng);
        s.id = "p-" + std::to_string(i);
        store.save_session(s);
        expect(store.load_session(s.id) == s, "session " + s.id + " did not survive save and load");
    }
    fs::remove_all(root);
}

void live_session() {
    auto cfg = LiveConfig::from_env();
    if (!cfg) throw Skipped{"CHAT_ENDPOINT and CHAT_MODEL are not set"};
    LiveBackend tinker(*cfg);
    LiveBackend child_backend(*cfg);
    ExchangeLog log;
    LlmRolePlayer child(child_backend, 1, default_catalog(), &log);
    const auto r = run_session(DialogueManager(), tinker, child, kLessons, 1, RunOptions{}, &log);
    expect(r.ok(), "session stopped: " + r.error.value_or(""));
    for (const auto& part : r.story.parts) expect(!text::trim(part).empty(), "a story part is empty");
    int found = 0;
    for (const auto& x : relevancy_check(r)) found += x.found;
    std::cout << "  live relevancy: " << found << "/15, turns logged: " << log.size() << std::endl;
    expect(found >= 12, std::to_string(found) + " of 15 elements found");
    LiveConfig judge_cfg = *cfg;
    judge_cfg.temperature = 0.0;
    LiveBackend judge(judge_cfg);
    const auto q = judge_quality(r, judge);
    for (auto m : kQualityMetrics) {
        const auto& a = q.at(m);
        std::cout << "  judge " << quality_metric_name(m) << ": " << (a.yes ? "Yes" : "No");
        if (a.scale) std::cout << ", Scale: " << *a.scale;
        std::cout << std::endl;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app("taleboard acceptance checks");
    std::string cli;
    app.add_option("--cli", cli, "Path of the taleboard command line tool");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Check> checks = {
        {"AC1", "state machine conformance", 1, state_machine_conformance},
        {"AC2", "golden prompt rendering", 1, golden_prompts},
        {"AC3", "determinism of simulate --n 5 --seed 11", 10, [&] { determinism(cli); }},
        {"AC4", "story assembly oracle", 1, story_assembly},
        {"AC5", "relevancy oracle", 1, relevancy_oracle},
        {"AC6", "aggregation oracle", 1, aggregation_oracle},
        {"AC7", "safety pipeline with mock clients", 5, safety_pipeline},
        {"AC8", "atomicity over 10000 invalid events", 30, atomicity},
        {"AC9", "persistence round trip of 1000 sessions", 10, persistence_round_trip},
        {"AC10", "live end-to-end session", 600, live_session, false},
    };
    int failed = 0;
    for (const auto& c : checks) {
        if (run_check(c) == Outcome::Fail && c.gating) ++failed;
    }
    std::cout << (failed ? std::to_string(failed) + " gating check(s) failed" : std::string("all gating checks passed"))
              << std::endl;
    return failed ? 1 : 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include "taleboard/error.hpp"
#include "taleboard/text.hpp"

using namespace taleboard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

Errc error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::InvalidArgument;
}

Session finished_session(std::uint64_t seed) { return tbtest::reachable_session(DialogueManager(), seed, 100); }

} // namespace

TEST_CASE("session JSON round trip for random reachable sessions") {
    const DialogueManager dm;
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const Session s = tbtest::random_session(dm, rng);
        const std::string text = session_to_json(s);
        const Session back = session_from_json(text);
        CHECK(back == s);
        CHECK(session_to_json(back) == text);
    }
}

TEST_CASE("session JSON layout") {
    const Session s = finished_session(1);
    const auto doc = nlohmann::json::parse(session_to_json(s));
    CHECK(doc.at("schema_version") == kSchemaVersion);
    CHECK(doc.at("pointer") == "Done");
    CHECK(doc.at("characters").size() == 3);
    CHECK(doc.at("stage_data").at("Crisis").contains("place"));
    CHECK(doc.at("story_parts").size() == 4);
    CHECK(doc.at("seed") == 1);
    CHECK(doc.at("saved_title").is_null());
    CHECK(doc.at("transcript").at(0).at("role") == "tinker");
}

TEST_CASE("session JSON rejects bad input") {
    const Session s = finished_session(2);
    auto doc = nlohmann::json::parse(session_to_json(s));

    auto v99 = doc;
    v99["schema_version"] = 99;
    CHECK(error_of([&] { session_from_json(v99.dump()); }) == Errc::SchemaVersionMismatch);
    CHECK(error_of([&] { session_from_json("{"); }) == Errc::ParseError);
    auto bad_pointer = doc;
    bad_pointer["pointer"] = "Nowhere";
    CHECK(error_of([&] { session_from_json(bad_pointer.dump()); }) == Errc::ParseError);
    auto no_id = doc;
    no_id.erase("id");
    CHECK(error_of([&] { session_from_json(no_id.dump()); }) == Errc::ParseError);
    auto bad_role = doc;
    bad_role["transcript"][0]["role"] = "narrator";
    CHECK(error_of([&] { session_from_json(bad_role.dump()); }) == Errc::ParseError);

    Session broken = s;
    broken.lessons.push_back("\xFF\xFE");
    CHECK(error_of([&] { session_to_json(broken); }) == Errc::InvalidArgument);
}

TEST_CASE("store saves and loads sessions") {
    TempDir dir("taleboard_store_sessions");
    Store store(dir.path);
    const Session s = finished_session(3);
    CHECK(store.save_session(s) == s.id);
    CHECK(store.has_session(s.id));
    CHECK(store.load_session(s.id) == s);
    CHECK(store.session_ids() == std::vector<std::string>{s.id});
    CHECK_FALSE(store.has_session("missing"));
    CHECK(error_of([&] { store.load_session("missing"); }) == Errc::NotFound);

    Session evil = s;
    evil.id = "../escape";
    CHECK(error_of([&] { store.save_session(evil); }) == Errc::InvalidArgument);

    // No temp files are left behind.
    for (const auto& entry : fs::directory_iterator(dir.path / "sessions")) {
        CHECK(entry.path().extension() == ".json");
    }
}

TEST_CASE("save_story examples") {
    TempDir dir("taleboard_store_stories");
    Store store(dir.path);
    const Session s = finished_session(4);

    const std::string id = store.save_story(s, "The Brave Troll");
    CHECK(id == "story-0001");
    CHECK(store.save_story(s, "The Brave Troll") == id);
    CHECK(error_of([&] { store.save_story(s, "Another Title"); }) == Errc::DuplicateTitleForSession);
    CHECK(error_of([&] { store.save_story(s, "   "); }) == Errc::InvalidArgument);

    const Session other = finished_session(5);
    CHECK(store.save_story(other, "Second") == "story-0002");

    const Session partial = tbtest::reachable_session(DialogueManager(), 6, 20);
    CHECK(error_of([&] { store.save_story(partial, "Too Soon"); }) == Errc::IncompleteStory);

    const SavedStory loaded = store.load_story(id);
    CHECK(loaded.title == "The Brave Troll");
    CHECK(loaded.session_id == s.id);
    CHECK(loaded.lessons == s.lessons);
    CHECK(loaded.parts == full_story(s).parts);
    CHECK(loaded.selections == selections_table(s));
    CHECK(loaded.created_at.size() == 20);
    CHECK(loaded.created_at.back() == 'Z');

    const auto index = store.story_index();
    REQUIRE(index.size() == 2);
    CHECK(index[0].id == "story-0001");
    CHECK(index[1].title == "Second");

    const std::string txt = read_file(dir.path / "stories" / (id + ".txt"));
    CHECK(txt == render_story_text(loaded));
    CHECK(text::starts_with(txt, "The Brave Troll\n"));
    for (const char* page : {"[Start]", "[Journey]", "[Climax]", "[End]"}) CHECK(txt.find(page) != std::string::npos);
    CHECK(error_of([&] { store.load_story("story-9999"); }) == Errc::NotFound);
}

TEST_CASE("store survives a restart") {
    TempDir dir("taleboard_store_restart");
    const Session s = finished_session(7);
    {
        Store store(dir.path);
        store.save_session(s);
        store.save_story(s, "Kept");
    }
    Store again(dir.path);
    CHECK(again.load_session(s.id) == s);
    CHECK(again.story_index().size() == 1);
    CHECK(again.save_story(s, "Kept") == "story-0001");
    CHECK(again.save_story(finished_session(8), "Next") == "story-0002");
}

TEST_CASE("write_file_atomic replaces content") {
    TempDir dir("taleboard_atomic");
    const auto p = dir.path / "a" / "b.txt";
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    CHECK(read_file(p) == "two");
    CHECK_FALSE(fs::exists(dir.path / "a" / "b.txt.tmp"));
    CHECK(error_of([&] { read_file(dir.path / "none"); }) == Errc::IoError);
}

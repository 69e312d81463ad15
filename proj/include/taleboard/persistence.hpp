#pragma once

#include "taleboard/session.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace taleboard {

inline constexpr int kSchemaVersion = 1;

// Session <-> JSON text. Keys are emitted in sorted order, so equal sessions
// serialize to identical bytes.
std::string session_to_json(const Session& session);
// Throws ParseError or SchemaVersionMismatch.
Session session_from_json(std::string_view json_text);

struct SavedStory {
    std::string id;
    std::string title;
    std::vector<std::string> lessons;
    std::string created_at; // ISO-8601 UTC
    std::array<std::string, 4> parts;
    std::vector<SelectionRow> selections;
    std::string session_id;
};

struct StoryIndexEntry {
    std::string id;
    std::string title;
    std::string session_id;
    std::string created_at;
};

// File-system store rooted at a directory:
//   sessions/<id>.json
//   stories/<story-id>.json, stories/<story-id>.txt
//   stories/index.jsonl
// Single writer per root; writes go through a temp file and rename.
class Store {
public:
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    std::string save_session(const Session& session);
    // Throws NotFound, SchemaVersionMismatch, ParseError or IoError.
    Session load_session(const std::string& id) const;
    bool has_session(const std::string& id) const;
    std::vector<std::string> session_ids() const;

    // Saves the finished story under `title`. Repeating the same (session,
    // title) pair returns the existing id; a different title for an already
    // saved session is rejected with DuplicateTitleForSession.
    std::string save_story(const Session& session, const std::string& title);
    SavedStory load_story(const std::string& id) const;
    std::vector<StoryIndexEntry> story_index() const;

private:
    std::filesystem::path root_;
    mutable std::mutex mutex_;
};

// Plain-text rendering of a saved story: title, then the four parts under
// their board-page headings.
std::string render_story_text(const SavedStory& story);

// Writes `content` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

} // namespace taleboard

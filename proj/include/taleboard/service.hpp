#pragma once

#include "taleboard/dialogue.hpp"
#include "taleboard/gateway.hpp"
#include "taleboard/persistence.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace taleboard {

struct ApiResponse {
    int status = 200;
    std::string body; // JSON
};

struct RouteInfo {
    std::string method;
    std::string path; // with {id} placeholders
    std::string summary;
};

// What a second request for a session does while another one is running.
enum class BusyPolicy { Wait, Reject };

// Session-oriented JSON API under /api/v1. Transport independent: handle()
// takes a method, path and body, so it can be driven without a socket.
//
// Sessions live in memory and every successful change is written through to
// the store, so a new service over the same store picks them up again.
// Requests for different sessions run concurrently; requests for the same
// session are serialized.
class StoryService {
public:
    StoryService(DialogueManager dialogue, std::shared_ptr<ChatBackend> backend, Store& store,
                 BusyPolicy busy = BusyPolicy::Wait);

    ApiResponse handle(const std::string& method, const std::string& path, const std::string& body);

    static const std::vector<RouteInfo>& routes();

    const DialogueManager& dialogue() const { return dialogue_; }

private:
    struct Slot {
        std::mutex mutex;
        Session session;
    };

    std::shared_ptr<Slot> find(const std::string& id);
    ApiResponse create(const std::string& body);
    ApiResponse advance(const std::string& id, const StepInput& input);
    ApiResponse snapshot(const std::string& id);
    ApiResponse story(const std::string& id);
    ApiResponse save(const std::string& id, const std::string& body);

    DialogueManager dialogue_;
    std::shared_ptr<ChatBackend> backend_;
    Store& store_;
    BusyPolicy busy_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

struct ServeOptions {
    std::string host = "0.0.0.0";
    int port = 8080; // 0 picks a free port
    std::optional<std::filesystem::path> static_dir; // served at "/"
    std::string cors_origin = "*";
    // Called with the bound port once the socket is listening.
    std::function<void(int port)> on_listening;
};

// Blocks serving `service` over HTTP until stop_serving() is called from
// another thread or the process ends. Returns false when the port cannot
// be bound.
bool serve(StoryService& service, const ServeOptions& options);
void stop_serving();

} // namespace taleboard

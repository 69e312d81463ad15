#include "taleboard/service.hpp"

#include <httplib.h>

#include <atomic>

namespace taleboard {

namespace {
std::atomic<httplib::Server*> g_server{nullptr};
}

bool serve(StoryService& service, const ServeOptions& options) {
    httplib::Server server;

    auto cors = [&](httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", options.cors_origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    };
    auto forward = [&](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse out = service.handle(req.method, req.path, req.body);
        cors(res);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };

    const std::string api = R"(/api/v1(/.*)?)";
    server.Get(api, forward);
    server.Post(api, forward);
    server.Options(R"(/.*)", [&](const httplib::Request&, httplib::Response& res) {
        cors(res);
        res.status = 204;
    });
    if (options.static_dir && !server.set_mount_point("/", options.static_dir->string())) return false;

    int port = options.port;
    if (port == 0) {
        port = server.bind_to_any_port(options.host);
        if (port <= 0) return false;
    } else if (!server.bind_to_port(options.host, port)) {
        return false;
    }
    g_server.store(&server);
    // The socket is already listening, so early connections queue up.
    if (options.on_listening) options.on_listening(port);
    const bool ok = server.listen_after_bind();
    g_server.store(nullptr);
    return ok;
}

void stop_serving() {
    if (auto* s = g_server.load()) s->stop();
}

} // namespace taleboard

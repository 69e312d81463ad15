#pragma once

// Private helpers for TUs that include httplib.

#include <httplib.h>

#include <chrono>
#include <string>

namespace taleboard::detail {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;   // starts with '/'
};

inline SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    SplitUrl out;
    out.origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (scheme_end == std::string::npos) out.origin = "http://" + out.origin;
    return out;
}

inline void configure_client(httplib::Client& client, std::chrono::milliseconds timeout) {
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
    client.enable_server_certificate_verification(true);
#endif
}

} // namespace taleboard::detail

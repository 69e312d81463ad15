#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taleboard {

enum class Errc {
    InvalidArgument,
    NotFound,
    EmptyLessons,
    WrongInputKind,
    InvalidOption,
    MissingTemplate,
    MissingPlaceholderData,
    Incomplete,
    // Backend failures. The dialogue layer treats all of these as BackendError.
    Transport,
    Auth,
    RateLimited,
    QueueExhausted,
    BadResponse,
    ParseError,
    TurnLimitExceeded,
    CategoryMappingError,
    EmptyInput,
    IncompleteStory,
    DuplicateTitleForSession,
    SchemaVersionMismatch,
    IoError,
};

std::string_view errc_name(Errc code);

inline bool is_backend_error(Errc code) {
    return code == Errc::Transport || code == Errc::Auth || code == Errc::RateLimited ||
           code == Errc::QueueExhausted || code == Errc::BadResponse;
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace taleboard

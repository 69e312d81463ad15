#pragma once

#include <map>
#include <string>
#include <vector>

namespace taleboard {

struct ChatMessage {
    std::string role; // "user" or "assistant"
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// A rendered system + user prompt pair for a chat-completion backend.
//
// `history` carries earlier turns of the same conversation and is sent between
// the system and user messages. `tag` names the request site (a pointer name,
// "Child", "Judge", "Extract"); `facts` are structured values behind the prompt.
// Neither tag nor facts go over the wire: they drive the offline template
// backend and the exchange log.
struct PromptRequest {
    std::string system;
    std::string user;
    std::vector<ChatMessage> history;
    std::string tag;
    std::map<std::string, std::string> facts;

    friend bool operator==(const PromptRequest&, const PromptRequest&) = default;
};

} // namespace taleboard

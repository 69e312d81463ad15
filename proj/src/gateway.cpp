#include "taleboard/gateway.hpp"

#include "taleboard/text.hpp"

#include <nlohmann/json.hpp>

#include <cctype>

namespace taleboard {

std::string_view backend_kind_name(BackendKind kind) {
    switch (kind) {
    case BackendKind::Live: return "live";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Template: return "template";
    }
    return "template";
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : queue_(responses.begin(), responses.end()) {}

std::string ScriptedBackend::send(const PromptRequest& request) {
    std::lock_guard lock(mutex_);
    received_.push_back(request);
    if (queue_.empty()) {
        throw Error(Errc::QueueExhausted, "scripted backend has no response left for " +
                                              (request.tag.empty() ? std::string("request")
                                                                   : request.tag));
    }
    std::string head = std::move(queue_.front());
    queue_.pop_front();
    return head;
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

std::vector<PromptRequest> ScriptedBackend::received() const {
    std::lock_guard lock(mutex_);
    return received_;
}


TemplateBackend::TemplateBackend() : TemplateBackend(default_rules()) {}

TemplateBackend::TemplateBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {
    if (rules_.empty() || rules_.back().pattern != "*") {
        rules_.push_back({"*", "Okay! Let's keep going."});
    }
}

std::string TemplateBackend::send(const PromptRequest& request) {
    for (const auto& rule : rules_) {
        if (text::glob_match(rule.pattern, request.tag)) {
            return text::fill_slots(rule.response, request.facts);
        }
    }
    return {};
}

std::vector<TemplateBackend::Rule> TemplateBackend::default_rules() {
    const std::string question = "\n---\nDid you like this part of the story?";
    return {
        {"Initiate",
         "Hi there! I'm Tinker Tales, your story friend. Today we will make a story together. "
         "First, let's choose the characters you like. Please scan your first character pawn!"},
        {"Character:*:Select",
         "Wow, you chose the {input_lower}! Press the speaker button and tell me the name you "
         "want to give the {input_lower}, and what the {input_lower} is like."},
        {"Character:1:Define", "What a wonderful friend! Now please scan the second character pawn."},
        {"Character:2:Define", "I like that one too! Now please scan the third character pawn."},
        {"Character:3:Define",
         "I love your characters! Now unfold the game board. Are you ready? Tell me with your voice."},
        {"*:Ready",
         "Great! Put all the character pawns on the {page_lower} side of the board. Are you ready? "
         "Tell me with your voice."},
        {"*:Start",
         "On this page we make the {stage_lower} of our story. Choose a place, an item and an "
         "emotion token and put them on the {page_lower} page. Then scan the place token first!"},
        {"*:Place:Select",
         "The {input_lower}! What does the {input_lower} look like, and how does it feel there? "
         "Press the speaker button and tell me."},
        {"*:Place:Define", "That sounds amazing! Now scan the item token you chose."},
        {"*:Item:Select",
         "Look, the {input_lower}! Who brought the {input_lower}, or was it found here? Press the "
         "speaker button and tell me."},
        {"*:Item:Define", "How exciting! Now scan the emotion token you chose."},
        {"*:Emotion:Select",
         "Feeling {input_lower}! Which character feels {input_lower}, and why? Press the speaker "
         "button and tell me."},
        {"*:Emotion:Define",
         "Thank you for sharing! Would you like to hear the {stage_lower} of our story? Press the "
         "speaker button and tell me."},
        {"Introduction:Complete",
         "Once upon a time, {hero1}, {hero2} and {hero3} came to the {place_lower}. There they "
         "found the {item_lower}. One of them felt {emotion_lower}, so the friends stayed close "
         "and helped each other." + question},
        {"Development:Complete",
         "Next, {hero1}, {hero2} and {hero3} traveled to the {place_lower}. On the way they saw "
         "the {item_lower}. Someone felt {emotion_lower}, and the others listened kindly." + question},
        {"Crisis:Complete",
         "Then trouble came at the {place_lower}. {hero1}, {hero2} and {hero3} needed the "
         "{item_lower} to be brave. They felt {emotion_lower}, but they worked together." + question},
        {"Conclusion:Complete",
         "At last, {hero1}, {hero2} and {hero3} reached the {place_lower}. They shared the "
         "{item_lower} and felt {emotion_lower} as the day ended. The friends learned that "
         "helping each other makes everything better." + question},
        {"Finish",
         "Hooray, our story is complete! Would you like to hear the story from the beginning again?"},
        {"Replay",
         "Here is our whole story.\n\n{story}\n\nTo save this story, say that you want to save it "
         "and tell me its title. You can listen to it again anytime."},
        {"Judge",
         "Elements Relevancy: Yes, Scale: 5\nNarrative Coherence: Yes, Scale: 5\n"
         "Educational Value: Yes, Scale: 5"},
        {"Extract", "Characters:\nPlaces:\nItems:\nEmotions:\nLesson: Friends help each other."},
        {"Child", "Yes!"},
        {"*", "Okay! Let's keep going."},
    };
}

ExchangeLog::ExchangeLog(const std::filesystem::path& jsonl_path)
    : file_(jsonl_path, std::ios::binary | std::ios::app) {
    if (!file_) throw Error(Errc::IoError, "cannot open exchange log " + jsonl_path.string());
}

void ExchangeLog::append(ChatExchange exchange) {
    std::lock_guard lock(mutex_);
    if (file_.is_open()) {
        file_ << to_jsonl_line(exchange) << '\n';
        file_.flush();
    }
    entries_.push_back(std::move(exchange));
}

std::vector<ChatExchange> ExchangeLog::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t ExchangeLog::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string ExchangeLog::to_jsonl_line(const ChatExchange& e) {
    nlohmann::json j;
    j["tag"] = e.tag;
    j["backend"] = backend_kind_name(e.backend);
    j["system"] = e.system;
    j["user"] = e.user;
    j["history_messages"] = e.history_messages;
    j["response"] = e.response;
    j["latency_ms"] = e.latency_ms;
    j["error"] = e.error ? nlohmann::json(*e.error) : nlohmann::json(nullptr);
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

ChatExchange ExchangeLog::from_jsonl_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        ChatExchange e;
        e.tag = j.at("tag").get<std::string>();
        const auto backend = j.at("backend").get<std::string>();
        bool known = false;
        for (auto kind : {BackendKind::Live, BackendKind::Scripted, BackendKind::Template}) {
            if (backend == backend_kind_name(kind)) {
                e.backend = kind;
                known = true;
            }
        }
        if (!known) throw Error(Errc::ParseError, "unknown backend kind \"" + backend + "\"");
        e.system = j.at("system").get<std::string>();
        e.user = j.at("user").get<std::string>();
        e.history_messages = j.at("history_messages").get<std::size_t>();
        e.response = j.at("response").get<std::string>();
        e.latency_ms = j.at("latency_ms").get<long long>();
        if (!j.at("error").is_null()) e.error = j.at("error").get<std::string>();
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("malformed exchange line: ") + ex.what());
    }
}

std::string complete(ChatBackend& backend, const PromptRequest& request, ExchangeLog* log) {
    ChatExchange exchange;
    exchange.tag = request.tag;
    exchange.backend = backend.kind();
    exchange.system = request.system;
    exchange.user = request.user;
    exchange.history_messages = request.history.size();

    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - started)
            .count();
    };
    try {
        std::string response = backend.send(request);
        exchange.response = response;
        exchange.latency_ms = elapsed();
        if (log) log->append(std::move(exchange));
        return response;
    } catch (const Error& e) {
        exchange.latency_ms = elapsed();
        exchange.error = std::string(errc_name(e.code())) + ": " + e.what();
        if (log) log->append(std::move(exchange));
        throw;
    } catch (const std::exception& e) {
        exchange.latency_ms = elapsed();
        exchange.error = std::string("Transport: ") + e.what();
        if (log) log->append(std::move(exchange));
        throw Error(Errc::Transport, e.what());
    }
}

} // namespace taleboard

#include "aspectsum/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "aspectsum/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace aspectsum {

void LlmEndpointConfig::check() const {
    if (temperature < 0.0) throw LlmError("temperature must be >= 0");
    if (retries < 0) throw LlmError("retries must be >= 0");
    if (timeout_seconds <= 0) throw LlmError("timeout must be positive");
}

HttpLlmClient::HttpLlmClient(LlmEndpointConfig config) : config_(std::move(config)) {
    config_.check();
    if (config_.base_url.empty()) throw LlmError("endpoint base_url is empty");
}

std::string HttpLlmClient::complete(const std::string& system_message,
                                    const std::string& user_message) {
    nlohmann::json body{
        {"model", config_.model_name},
        {"temperature", config_.temperature},
        {"max_tokens", config_.max_output_tokens},
        {"messages",
         nlohmann::json::array({nlohmann::json{{"role", "system"}, {"content", system_message}},
                                nlohmann::json{{"role", "user"}, {"content", user_message}}})}};

    // One connection per call: cheap at this request rate and safe to run
    // from several worker threads at once.
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key != nullptr && *key != '\0')
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw LlmError("endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw LlmError("endpoint returned status " + std::to_string(res->status) + ": " +
                       res->body);

    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("endpoint returned malformed JSON: ") + e.what());
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
        throw LlmError("endpoint reply has no choices");
    const nlohmann::json& first = reply["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string())
        throw LlmError("endpoint reply has no message content");
    return first["message"]["content"].get<std::string>();
}

namespace {

bool contains_ci(const std::string& haystack_lower, std::string_view needle) {
    return haystack_lower.find(needle) != std::string::npos;
}

const std::vector<std::string>& known_headers() {
    static const std::vector<std::string> known = {"OVERVIEW:", "RISK FACTORS:",
                                                   "COURSE TIMELINE:"};
    return known;
}

// The instruction part of a prompt: everything before the embedded note,
// recognized by its first section header. Without one, assume the first few
// hundred characters. Keeps note content from being read as instructions.
std::string instruction_part(const std::string& message) {
    std::size_t note_start = std::min<std::size_t>(message.size(), 400);
    for (const std::string& header : known_headers()) {
        const std::size_t pos = message.find(header);
        if (pos != std::string::npos && pos < note_start) note_start = pos;
    }
    return lower(message.substr(0, note_start));
}

// Text of `header`'s section: everything after the header up to the next
// known header (or end of message).
std::string extract_section(const std::string& message, const std::string& header) {
    const std::vector<std::string>& known = known_headers();
    const std::size_t start = message.find(header);
    if (start == std::string::npos) return {};
    const std::size_t body_start = start + header.size();
    std::size_t end = message.size();
    for (const std::string& other : known) {
        if (other == header) continue;
        const std::size_t pos = message.find(other, body_start);
        if (pos != std::string::npos && pos < end) end = pos;
    }
    return trim(message.substr(body_start, end - body_start));
}

}  // namespace

MockLlmClient::MockLlmClient(std::uint64_t seed, std::size_t max_reply_tokens)
    : seed_(seed), max_reply_tokens_(max_reply_tokens) {}

void MockLlmClient::fail_if_contains(const std::string& needle, int times) {
    std::lock_guard<std::mutex> lock(mutex_);
    fail_needle_ = needle;
    fail_remaining_ = times;
}

std::vector<LlmCall> MockLlmClient::transcript() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return transcript_;
}

std::size_t MockLlmClient::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return transcript_.size();
}

std::string MockLlmClient::complete(const std::string& system_message,
                                    const std::string& user_message) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        transcript_.push_back({system_message, user_message});
        if (fail_remaining_ > 0 && !fail_needle_.empty() &&
            user_message.find(fail_needle_) != std::string::npos) {
            --fail_remaining_;
            throw LlmError("injected mock endpoint failure");
        }
    }

    // Replies are a pure function of (seed, message) so that thread
    // scheduling and retry order cannot change any output.
    const std::uint64_t h = mix64(seed_ ^ fnv1a64(user_message));
    const std::string instruction = instruction_part(user_message);

    if (contains_ci(instruction, "yes or no")) return (h & 1u) == 0 ? "Yes" : "No";

    std::string header = "OVERVIEW:";
    if (contains_ci(instruction, "risk factor"))
        header = "RISK FACTORS:";
    else if (contains_ci(instruction, "timeline") || contains_ci(instruction, "chronolog"))
        header = "COURSE TIMELINE:";

    std::string body = extract_section(user_message, header);
    if (body.empty()) {
        // Not a sectioned note; reply with the tail of the message, which is
        // the note text for any instruction-first prompt.
        std::istringstream in(user_message);
        std::vector<std::string> tokens;
        for (std::string tok; in >> tok;) tokens.push_back(tok);
        std::string tail;
        const std::size_t take = std::min(tokens.size(), max_reply_tokens_);
        for (std::size_t i = tokens.size() - take; i < tokens.size(); ++i) {
            if (!tail.empty()) tail += ' ';
            tail += tokens[i];
        }
        return tail;
    }
    return truncate_ws_tokens(body, max_reply_tokens_);
}

std::unique_ptr<LlmClient> make_http_client(const LlmEndpointConfig& config) {
    return std::make_unique<HttpLlmClient>(config);
}

std::unique_ptr<MockLlmClient> make_mock_client(std::uint64_t seed) {
    return std::make_unique<MockLlmClient>(seed);
}

}  // namespace aspectsum

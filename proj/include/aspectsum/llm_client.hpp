#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace aspectsum {

struct LlmEndpointConfig {
    std::string base_url;  // e.g. http://localhost:8000
    std::string model_name = "local-chat";
    double temperature = 0.0;
    std::size_t max_output_tokens = 512;
    int timeout_seconds = 120;
    int retries = 2;
    // Name of the environment variable holding the bearer token; empty value
    // or unset variable sends no Authorization header (local endpoints).
    std::string api_key_env = "ASPECTSUM_API_KEY";

    void check() const;
};

struct LlmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LlmCall {
    std::string system_message;
    std::string user_message;
};

// One chat completion (system + user message -> assistant text).
// Implementations must be safe for concurrent complete() calls.
class LlmClient {
  public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& system_message,
                                 const std::string& user_message) = 0;
};

// Talks to an HTTP chat-completion endpoint (POST {base_url}/v1/chat/completions
// with the familiar messages/choices JSON shape). A fresh connection per call
// keeps concurrent use safe.
class HttpLlmClient : public LlmClient {
  public:
    explicit HttpLlmClient(LlmEndpointConfig config);
    std::string complete(const std::string& system_message,
                         const std::string& user_message) override;

    const LlmEndpointConfig& config() const { return config_; }

  private:
    LlmEndpointConfig config_;
};

// Offline stand-in with reproducible output: the reply depends only on the
// seed and the message content, never on call order or thread interleaving.
// Summary-style requests get the note section matching the instruction
// (risk-factor wording -> RISK FACTORS, timeline wording -> COURSE TIMELINE,
// anything else -> OVERVIEW); yes/no questions are answered by hash parity.
class MockLlmClient : public LlmClient {
  public:
    explicit MockLlmClient(std::uint64_t seed, std::size_t max_reply_tokens = 120);
    std::string complete(const std::string& system_message,
                         const std::string& user_message) override;

    // Makes the next `times` calls whose user message contains `needle`
    // throw, to exercise retry paths.
    void fail_if_contains(const std::string& needle, int times);

    std::vector<LlmCall> transcript() const;
    std::size_t call_count() const;

  private:
    std::uint64_t seed_;
    std::size_t max_reply_tokens_;
    mutable std::mutex mutex_;
    std::vector<LlmCall> transcript_;
    std::string fail_needle_;
    int fail_remaining_ = 0;
};

// Delegates to a function; for tests.
class CallbackLlmClient : public LlmClient {
  public:
    using Fn = std::function<std::string(const std::string&, const std::string&)>;
    explicit CallbackLlmClient(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const std::string& system_message,
                         const std::string& user_message) override {
        return fn_(system_message, user_message);
    }

  private:
    Fn fn_;
};

std::unique_ptr<LlmClient> make_http_client(const LlmEndpointConfig& config);
std::unique_ptr<MockLlmClient> make_mock_client(std::uint64_t seed);

}  // namespace aspectsum

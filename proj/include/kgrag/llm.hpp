#pragma once

#include "kgrag/http_transport.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <semaphore>
#include <string>

namespace kgrag {

struct LlmRequest {
    std::string system;  // omitted from the exchange when empty
    std::string prompt;
    // Routing key for replaying providers (the chunk id during extraction).
    std::string key;
};

enum class LlmKind { remote, stub };

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string name() const = 0;
    virtual LlmKind kind() const = 0;
    virtual std::string complete(const LlmRequest& request) = 0;
};

// Deterministic offline provider: "STUB-ANSWER\n" + sha256 hex of the prompt.
class StubLlm final : public LlmProvider {
public:
    std::string name() const override { return "stub"; }
    LlmKind kind() const override { return LlmKind::stub; }
    std::string complete(const LlmRequest& request) override;
};

// Replays canned outputs keyed by LlmRequest::key; an unknown key fails like
// an unreachable provider (ProviderError).
class CannedLlm final : public LlmProvider {
public:
    explicit CannedLlm(std::map<std::string, std::string> outputs) : outputs_(std::move(outputs)) {}
    // Loads every <key>.txt file in the directory.
    static CannedLlm from_directory(const std::string& dir);

    std::string name() const override { return "canned"; }
    LlmKind kind() const override { return LlmKind::stub; }
    std::string complete(const LlmRequest& request) override;
    std::size_t size() const noexcept { return outputs_.size(); }

private:
    std::map<std::string, std::string> outputs_;
};

struct RemoteLlmConfig {
    std::string endpoint;
    std::string model;
    std::string api_key;
    double temperature = 0.0;
    int max_retries = 2;
    std::chrono::milliseconds backoff{500};  // doubled after each retry
    int max_in_flight = 8;
};

// Chat-completion exchange: POST {"model", "messages", "temperature"} and read
// either a top-level "content" string or choices[0].message.content.
// Transport failures, 429 and 5xx are retried; other statuses fail at once.
class RemoteLlm final : public LlmProvider {
public:
    RemoteLlm(RemoteLlmConfig cfg, std::shared_ptr<HttpTransport> transport);
    std::string name() const override { return cfg_.model; }
    LlmKind kind() const override { return LlmKind::remote; }
    std::string complete(const LlmRequest& request) override;

private:
    RemoteLlmConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
    std::counting_semaphore<> in_flight_;
};

}  // namespace kgrag

#include "kgrag/llm.hpp"

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <thread>

namespace kgrag {

std::string StubLlm::complete(const LlmRequest& request) {
    return "STUB-ANSWER\n" + sha256_hex(request.prompt);
}

CannedLlm CannedLlm::from_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw ConfigurationError("canned output directory not found: " + dir);
    std::map<std::string, std::string> outputs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            outputs[entry.path().stem().string()] = read_file(entry.path().string());
        }
    }
    return CannedLlm(std::move(outputs));
}

std::string CannedLlm::complete(const LlmRequest& request) {
    auto it = outputs_.find(request.key);
    if (it == outputs_.end()) throw ProviderError("no canned output for '" + request.key + "'", 0);
    return it->second;
}

RemoteLlm::RemoteLlm(RemoteLlmConfig cfg, std::shared_ptr<HttpTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), in_flight_(std::max(1, cfg_.max_in_flight)) {
    if (cfg_.endpoint.empty()) throw ConfigurationError("remote LLM provider needs an endpoint");
}

std::string RemoteLlm::complete(const LlmRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    const std::string body =
        nlohmann::json{{"model", cfg_.model}, {"messages", messages}, {"temperature", cfg_.temperature}}
            .dump();
    std::map<std::string, std::string> headers;
    if (!cfg_.api_key.empty()) headers["Authorization"] = "Bearer " + cfg_.api_key;

    auto backoff = cfg_.backoff;
    for (int attempts = 1;; ++attempts) {
        int status = 0;
        std::string failure;
        std::optional<HttpResponse> res;
        try {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<>& sem;
                ~Release() { sem.release(); }
            } guard{in_flight_};
            res = transport_->post_json(cfg_.endpoint, headers, body);
        } catch (const ProviderError& e) {
            failure = e.what();
        }
        if (res) {
            status = res->status;
            if (status >= 200 && status < 300) {
                try {
                    const auto j = nlohmann::json::parse(res->body);
                    if (j.contains("content") && j["content"].is_string()) return j["content"];
                    return j.at("choices").at(0).at("message").at("content").get<std::string>();
                } catch (const nlohmann::json::exception& e) {
                    throw ProviderError(std::string("malformed completion response: ") + e.what(),
                                        status, attempts);
                }
            }
            failure = "completion request failed with HTTP " + std::to_string(status);
            if (status != 429 && status < 500) throw ProviderError(failure, status, attempts);
        }
        if (attempts > cfg_.max_retries) {
            throw ProviderError(failure + " (after " + std::to_string(attempts) + " attempts)",
                                status, attempts);
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

}  // namespace kgrag

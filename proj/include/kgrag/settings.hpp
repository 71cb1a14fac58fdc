#pragma once

#include "kgrag/cache.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/embedding.hpp"
#include "kgrag/http_transport.hpp"
#include "kgrag/llm.hpp"
#include "kgrag/retrieval.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>
#include <string>

namespace kgrag {

struct EmbeddingSettings {
    std::string kind = "local";  // local | remote
    std::size_t dim = kDefaultEmbeddingDim;
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    int max_in_flight = 8;
};

struct LlmSettings {
    std::string kind = "stub";  // stub | remote
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    double temperature = 0.0;
    int max_retries = 2;
    int backoff_ms = 500;
    int max_in_flight = 8;
};

// Contents of <data-dir>/settings.json. Every key is optional.
struct Settings {
    CorpusConfig corpus;
    EmbeddingSettings embedding;
    EmbeddingSettings cache_embedding;
    LlmSettings llm;
    RetrievalParams retrieval;
    std::size_t combined_token_cap = 8000;
    std::size_t node_context_cap = 2000;
    CacheConfig cache;
    std::string cost_provider = "DeepSeek-V3";
    std::string extraction_canned_dir;
    int extraction_in_flight = 8;

    static Settings from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    // Defaults when the file does not exist; FormatError when it is malformed.
    static Settings load(const std::string& path);
};

std::shared_ptr<EmbeddingProvider> make_embedder(const EmbeddingSettings& s,
                                                 std::shared_ptr<HttpTransport> transport);
std::shared_ptr<LlmProvider> make_llm(const LlmSettings& s, std::shared_ptr<HttpTransport> transport);

}  // namespace kgrag

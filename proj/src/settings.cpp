#include "kgrag/settings.hpp"

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>

namespace kgrag {

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

EmbeddingSettings embedding_from_json(const nlohmann::json& j, EmbeddingSettings s) {
    read_opt(j, "kind", s.kind);
    read_opt(j, "dim", s.dim);
    read_opt(j, "endpoint", s.endpoint);
    read_opt(j, "model", s.model);
    read_opt(j, "api_key_env", s.api_key_env);
    read_opt(j, "max_in_flight", s.max_in_flight);
    return s;
}

nlohmann::json embedding_to_json(const EmbeddingSettings& s) {
    return {{"kind", s.kind},           {"dim", s.dim},
            {"endpoint", s.endpoint},   {"model", s.model},
            {"api_key_env", s.api_key_env}, {"max_in_flight", s.max_in_flight}};
}

std::string resolve_key(const std::string& env_name) {
    if (env_name.empty()) return {};
    const char* v = std::getenv(env_name.c_str());
    if (v == nullptr) throw ConfigurationError("environment variable " + env_name + " is not set");
    return v;
}

}  // namespace

Settings Settings::from_json(const nlohmann::json& j) {
    Settings s;
    try {
        if (j.contains("corpus")) {
            read_opt(j["corpus"], "chunk_size", s.corpus.chunk_size);
            read_opt(j["corpus"], "overlap", s.corpus.overlap);
        }
        if (j.contains("embedding")) s.embedding = embedding_from_json(j["embedding"], s.embedding);
        if (j.contains("cache_embedding")) {
            s.cache_embedding = embedding_from_json(j["cache_embedding"], s.cache_embedding);
        }
        if (j.contains("llm")) {
            const auto& l = j["llm"];
            read_opt(l, "kind", s.llm.kind);
            read_opt(l, "endpoint", s.llm.endpoint);
            read_opt(l, "model", s.llm.model);
            read_opt(l, "api_key_env", s.llm.api_key_env);
            read_opt(l, "temperature", s.llm.temperature);
            read_opt(l, "max_retries", s.llm.max_retries);
            read_opt(l, "backoff_ms", s.llm.backoff_ms);
            read_opt(l, "max_in_flight", s.llm.max_in_flight);
        }
        if (j.contains("retrieval")) {
            const auto& r = j["retrieval"];
            read_opt(r, "k", s.retrieval.k);
            read_opt(r, "context_token_cap", s.retrieval.context_token_cap);
            if (r.contains("depth")) {
                const auto& d = r["depth"];
                s.retrieval.depth = d.is_string() ? TraversalDepth::parse(d.get<std::string>())
                                                  : TraversalDepth::limit(d.get<std::size_t>());
            }
            read_opt(r, "combined_token_cap", s.combined_token_cap);
        }
        if (j.contains("kg")) read_opt(j["kg"], "node_context_cap", s.node_context_cap);
        if (j.contains("cache")) {
            read_opt(j["cache"], "threshold", s.cache.threshold);
            read_opt(j["cache"], "capacity", s.cache.capacity);
        }
        read_opt(j, "cost_provider", s.cost_provider);
        if (j.contains("extraction")) {
            read_opt(j["extraction"], "canned_dir", s.extraction_canned_dir);
            read_opt(j["extraction"], "max_in_flight", s.extraction_in_flight);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed settings: ") + e.what());
    }
    s.corpus.validate();
    s.retrieval.validate();
    s.cache.validate();
    return s;
}

nlohmann::json Settings::to_json() const {
    nlohmann::json j;
    j["corpus"] = {{"chunk_size", corpus.chunk_size}, {"overlap", corpus.overlap}};
    j["embedding"] = embedding_to_json(embedding);
    j["cache_embedding"] = embedding_to_json(cache_embedding);
    j["llm"] = {{"kind", llm.kind},
                {"endpoint", llm.endpoint},
                {"model", llm.model},
                {"api_key_env", llm.api_key_env},
                {"temperature", llm.temperature},
                {"max_retries", llm.max_retries},
                {"backoff_ms", llm.backoff_ms},
                {"max_in_flight", llm.max_in_flight}};
    j["retrieval"] = {{"k", retrieval.k},
                      {"depth", retrieval.depth.to_string()},
                      {"context_token_cap", retrieval.context_token_cap},
                      {"combined_token_cap", combined_token_cap}};
    j["kg"] = {{"node_context_cap", node_context_cap}};
    j["cache"] = {{"threshold", cache.threshold}, {"capacity", cache.capacity}};
    j["cost_provider"] = cost_provider;
    j["extraction"] = {{"canned_dir", extraction_canned_dir}, {"max_in_flight", extraction_in_flight}};
    return j;
}

Settings Settings::load(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return {};
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
}

std::shared_ptr<EmbeddingProvider> make_embedder(const EmbeddingSettings& s,
                                                 std::shared_ptr<HttpTransport> transport) {
    if (s.kind == "local") return std::make_shared<LocalHashEmbedder>(s.dim);
    if (s.kind == "remote") {
        RemoteEmbeddingConfig cfg{s.endpoint, s.model, resolve_key(s.api_key_env), 0, s.max_in_flight};
        return std::make_shared<RemoteEmbedder>(std::move(cfg), std::move(transport));
    }
    throw ConfigurationError("unknown embedding kind '" + s.kind + "' (expected local or remote)");
}

std::shared_ptr<LlmProvider> make_llm(const LlmSettings& s, std::shared_ptr<HttpTransport> transport) {
    if (s.kind == "stub") return std::make_shared<StubLlm>();
    if (s.kind == "remote") {
        RemoteLlmConfig cfg;
        cfg.endpoint = s.endpoint;
        cfg.model = s.model;
        cfg.api_key = resolve_key(s.api_key_env);
        cfg.temperature = s.temperature;
        cfg.max_retries = s.max_retries;
        cfg.backoff = std::chrono::milliseconds(s.backoff_ms);
        cfg.max_in_flight = s.max_in_flight;
        return std::make_shared<RemoteLlm>(std::move(cfg), std::move(transport));
    }
    throw ConfigurationError("unknown llm kind '" + s.kind + "' (expected stub or remote)");
}

}  // namespace kgrag

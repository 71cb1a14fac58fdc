#pragma once

#include "kgrag/http_transport.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const noexcept;
    bool operator==(const EmbeddingVector&) const = default;
};

enum class ProviderKind { remote, local_deterministic };

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual ProviderKind kind() const = 0;
    // Empty text is not an error.
    virtual EmbeddingVector embed(std::string_view text) = 0;
};

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

std::uint64_t fnv1a_64(std::string_view bytes) noexcept;

// Signed feature hashing of lowercase alphanumeric terms, L2-normalized.
// Bytes >= 0x80 count as term characters so UTF-8 words stay intact.
EmbeddingVector local_hash_embed(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

class LocalHashEmbedder final : public EmbeddingProvider {
public:
    explicit LocalHashEmbedder(std::size_t dim = kDefaultEmbeddingDim);
    std::string name() const override { return "local-hash-" + std::to_string(dim_); }
    std::size_t dim() const override { return dim_; }
    ProviderKind kind() const override { return ProviderKind::local_deterministic; }
    EmbeddingVector embed(std::string_view text) override { return local_hash_embed(text, dim_); }

private:
    std::size_t dim_;
};

struct RemoteEmbeddingConfig {
    std::string endpoint;
    std::string model;
    std::string api_key;  // resolved credential, may be empty for open endpoints
    std::size_t dim = 0;  // 0: learned from the first response
    int max_in_flight = 8;
};

// Generic embeddings contract: POST {"model", "input"} -> {"embedding": [...]}.
// OpenAI-style {"data": [{"embedding": [...]}]} responses are accepted too.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(RemoteEmbeddingConfig cfg, std::shared_ptr<HttpTransport> transport);
    std::string name() const override { return cfg_.model; }
    std::size_t dim() const override;
    ProviderKind kind() const override { return ProviderKind::remote; }
    EmbeddingVector embed(std::string_view text) override;

private:
    RemoteEmbeddingConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
    std::counting_semaphore<> in_flight_;
    std::atomic<std::size_t> learned_dim_{0};
};

// Cosine similarity; 0.0 when either side has zero norm. Throws
// ContractViolation on dimension mismatch. Result is clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Indices of the min(k, n) highest scores, descending; ties by ascending index.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

}  // namespace kgrag

#include "kgrag/embedding.hpp"

#include "kgrag/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kgrag {

double EmbeddingVector::norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

std::uint64_t fnv1a_64(std::string_view bytes) noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

bool is_term_byte(unsigned char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

EmbeddingVector local_hash_embed(std::string_view text, std::size_t dim) {
    if (dim < 1) throw ContractViolation("embedding dim must be >= 1");
    EmbeddingVector out{std::vector<double>(dim, 0.0)};
    std::string term;
    auto flush = [&] {
        if (term.empty()) return;
        const std::uint64_t h = fnv1a_64(term);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        out.values[h % dim] += sign;
        term.clear();
    };
    for (unsigned char c : text) {
        if (is_term_byte(c)) {
            term.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                                : static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    const double n = out.norm();
    if (n > 0.0) {
        for (double& v : out.values) v /= n;
    }
    return out;
}

LocalHashEmbedder::LocalHashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ < 1) throw ContractViolation("embedding dim must be >= 1");
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbeddingConfig cfg, std::shared_ptr<HttpTransport> transport)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      in_flight_(std::max(1, cfg_.max_in_flight)) {
    if (cfg_.endpoint.empty()) throw ConfigurationError("remote embedding provider needs an endpoint");
    learned_dim_ = cfg_.dim;
}

std::size_t RemoteEmbedder::dim() const { return learned_dim_.load(); }

EmbeddingVector RemoteEmbedder::embed(std::string_view text) {
    nlohmann::json req = {{"model", cfg_.model}, {"input", std::string(text)}};
    std::map<std::string, std::string> headers;
    if (!cfg_.api_key.empty()) headers["Authorization"] = "Bearer " + cfg_.api_key;

    HttpResponse res;
    {
        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } guard{in_flight_};
        res = transport_->post_json(cfg_.endpoint, headers, req.dump());
    }

    if (res.status < 200 || res.status >= 300) {
        throw ProviderError("embedding request failed with HTTP " + std::to_string(res.status),
                            res.status);
    }
    EmbeddingVector out;
    try {
        const auto body = nlohmann::json::parse(res.body);
        const nlohmann::json* arr = nullptr;
        if (body.contains("embedding")) {
            arr = &body.at("embedding");
        } else if (body.contains("data") && !body.at("data").empty()) {
            arr = &body.at("data").at(0).at("embedding");
        }
        if (arr == nullptr || !arr->is_array()) throw std::runtime_error("no embedding array");
        out.values = arr->get<std::vector<double>>();
    } catch (const std::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what(), res.status);
    }
    if (!std::all_of(out.values.begin(), out.values.end(), [](double v) { return std::isfinite(v); })) {
        throw ProviderError("embedding response contains non-finite values", res.status);
    }
    std::size_t expected = 0;
    if (!learned_dim_.compare_exchange_strong(expected, out.dim()) && expected != out.dim()) {
        throw ProviderError("embedding dimension changed from " + std::to_string(expected) +
                                " to " + std::to_string(out.dim()),
                            res.status);
    }
    return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw ContractViolation("cosine_similarity: dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](std::size_t x, std::size_t y) {
                          if (scores[x] != scores[y]) return scores[x] > scores[y];
                          return x < y;
                      });
    idx.resize(take);
    return idx;
}

}  // namespace kgrag

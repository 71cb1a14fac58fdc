#pragma once

#include "kgrag/embedding.hpp"
#include "kgrag/generation.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct CacheConfig {
    double threshold = 0.85;
    std::size_t capacity = 1024;

    void validate() const;  // 0 <= threshold <= 1, capacity >= 1
};

// Scores within this distance below the threshold still count as hits, so
// threshold 1.0 matches identical embeddings despite rounding.
inline constexpr double kCacheScoreTolerance = 1e-9;

struct ChatCacheEntry {
    std::string query_text;
    EmbeddingVector query_embedding;
    AnswerRecord answer;
    std::int64_t created_at = 0;  // unix milliseconds
    std::uint64_t hits = 0;
};

struct CacheLookup {
    std::optional<ChatCacheEntry> hit;  // answer flagged cache_hit
    double best_score = 0.0;            // 0 for an empty cache
};

// Chat-history reuse: answers stored with the embedding of their query and
// returned for new queries whose cosine similarity reaches the threshold.
// Lookups run concurrently; inserts and evictions are serialized.
class ChatCache {
public:
    explicit ChatCache(CacheConfig cfg = {});

    const CacheConfig& config() const noexcept { return cfg_; }
    std::size_t size() const;

    // Hit iff the best cosine >= threshold; ties go to the newest entry.
    // A hit refreshes the entry's recency. With a mode, only entries answered
    // in that mode are candidates.
    CacheLookup lookup(const EmbeddingVector& query,
                       std::optional<AnswerMode> mode = std::nullopt) const;
    CacheLookup lookup(std::string_view query, EmbeddingProvider& embedder,
                       std::optional<AnswerMode> mode = std::nullopt) const;

    // Always adds a new entry, then evicts least-recently-used ones past capacity.
    void insert(std::string query, EmbeddingVector embedding, AnswerRecord answer,
                std::optional<std::int64_t> created_at = std::nullopt);
    void insert(std::string query, EmbeddingProvider& embedder, AnswerRecord answer);

    void clear();

    // Entries oldest-first.
    std::vector<ChatCacheEntry> entries() const;

    // JSON lines: query, embedding, answer, created_at (plus hits).
    std::string to_jsonl() const;
    // Appends the entries of a to_jsonl() dump, then applies capacity.
    void load_jsonl(std::string_view text);

private:
    struct Slot {
        ChatCacheEntry entry;
        std::uint64_t seq = 0;
        mutable std::atomic<std::uint64_t> last_used{0};
        mutable std::atomic<std::uint64_t> hits{0};
    };

    CacheConfig cfg_;
    mutable std::shared_mutex mutex_;
    std::vector<std::unique_ptr<Slot>> slots_;  // insertion order
    mutable std::atomic<std::uint64_t> clock_{0};
    std::uint64_t next_seq_ = 0;

    void insert_locked(ChatCacheEntry entry);
};

}  // namespace kgrag

#include "kgrag/cache.hpp"

#include "kgrag/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <mutex>

namespace kgrag {

void CacheConfig::validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ContractViolation("cache threshold must lie in [0, 1]");
    }
    if (capacity < 1) throw ContractViolation("cache capacity must be >= 1");
}

ChatCache::ChatCache(CacheConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::size_t ChatCache::size() const {
    std::shared_lock lock(mutex_);
    return slots_.size();
}

CacheLookup ChatCache::lookup(const EmbeddingVector& query, std::optional<AnswerMode> mode) const {
    std::shared_lock lock(mutex_);
    CacheLookup out;
    const Slot* best = nullptr;
    for (const auto& slot : slots_) {
        if (slot->entry.query_embedding.dim() != query.dim()) continue;
        if (mode && slot->entry.answer.mode != *mode) continue;
        const double s = cosine_similarity(query, slot->entry.query_embedding);
        // later slots are newer, so >= hands ties to the most recent entry
        if (best == nullptr || s >= out.best_score) {
            best = slot.get();
            out.best_score = s;
        }
    }
    if (best != nullptr && out.best_score >= cfg_.threshold - kCacheScoreTolerance) {
        best->last_used.store(++clock_);
        const auto hits = ++best->hits;
        ChatCacheEntry e = best->entry;
        e.hits = hits;
        e.answer.cache_hit = true;
        out.hit = std::move(e);
    }
    return out;
}

CacheLookup ChatCache::lookup(std::string_view query, EmbeddingProvider& embedder,
                              std::optional<AnswerMode> mode) const {
    return lookup(embedder.embed(query), mode);
}

void ChatCache::insert(std::string query, EmbeddingVector embedding, AnswerRecord answer,
                       std::optional<std::int64_t> created_at) {
    ChatCacheEntry e;
    e.query_text = std::move(query);
    e.query_embedding = std::move(embedding);
    e.answer = std::move(answer);
    e.answer.cache_hit = false;
    e.created_at = created_at.value_or(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    std::unique_lock lock(mutex_);
    insert_locked(std::move(e));
}

void ChatCache::insert(std::string query, EmbeddingProvider& embedder, AnswerRecord answer) {
    auto emb = embedder.embed(query);
    insert(std::move(query), std::move(emb), std::move(answer));
}

void ChatCache::insert_locked(ChatCacheEntry entry) {
    auto slot = std::make_unique<Slot>();
    slot->hits = entry.hits;
    slot->entry = std::move(entry);
    slot->seq = next_seq_++;
    slot->last_used = ++clock_;
    slots_.push_back(std::move(slot));
    while (slots_.size() > cfg_.capacity) {
        auto victim = std::min_element(slots_.begin(), slots_.end(), [](const auto& a, const auto& b) {
            return a->last_used.load() < b->last_used.load();
        });
        slots_.erase(victim);
    }
}

void ChatCache::clear() {
    std::unique_lock lock(mutex_);
    slots_.clear();
}

std::vector<ChatCacheEntry> ChatCache::entries() const {
    std::shared_lock lock(mutex_);
    std::vector<ChatCacheEntry> out;
    out.reserve(slots_.size());
    for (const auto& s : slots_) {
        out.push_back(s->entry);
        out.back().hits = s->hits.load();
    }
    return out;
}

std::string ChatCache::to_jsonl() const {
    std::shared_lock lock(mutex_);
    // least recently used first, so reloading replays the same recency order
    std::vector<const Slot*> order;
    for (const auto& s : slots_) order.push_back(s.get());
    std::stable_sort(order.begin(), order.end(), [](const Slot* a, const Slot* b) {
        return a->last_used.load() < b->last_used.load();
    });
    std::string out;
    for (const Slot* s : order) {
        nlohmann::json j = {{"query", s->entry.query_text},
                            {"embedding", s->entry.query_embedding.values},
                            {"answer", to_json(s->entry.answer)},
                            {"created_at", s->entry.created_at},
                            {"hits", s->hits.load()}};
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

void ChatCache::load_jsonl(std::string_view text) {
    std::vector<ChatCacheEntry> loaded;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ChatCacheEntry e;
            e.query_text = j.at("query").get<std::string>();
            e.query_embedding.values = j.at("embedding").get<std::vector<double>>();
            e.answer = answer_from_json(j.at("answer"));
            e.answer.cache_hit = false;
            e.created_at = j.at("created_at").get<std::int64_t>();
            e.hits = j.value("hits", std::uint64_t{0});
            loaded.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("cache line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::unique_lock lock(mutex_);
    for (auto& e : loaded) insert_locked(std::move(e));
}

}  // namespace kgrag

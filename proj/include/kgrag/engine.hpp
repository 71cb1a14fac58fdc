#pragma once

#include "kgrag/cache.hpp"
#include "kgrag/corpus.hpp"
#include "kgrag/cost.hpp"
#include "kgrag/extraction.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/settings.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace kgrag {

struct AskRequest {
    std::string session_id;
    std::string query;
    AnswerMode mode = AnswerMode::kgrag;
    bool use_cache = true;
};

struct AskResponse {
    AnswerRecord answer;
    double cost_estimate_usd = 0.0;
    std::int64_t timing_ms = 0;
};

struct Health {
    std::size_t doc_count = 0;
    std::size_t chunk_count = 0;
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t cache_size = 0;
    std::size_t triple_count = 0;
    std::size_t approved_triples = 0;
    bool graph_built = false;
};

struct BuildReport {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t triples_used = 0;
    std::vector<std::string> warnings;
};

struct ExtractReport {
    std::vector<ExtractionRun> runs;
    std::size_t triples_added = 0;
    std::size_t failed_runs = 0;
};

struct EngineProviders {
    std::shared_ptr<EmbeddingProvider> embedder;
    std::shared_ptr<EmbeddingProvider> cache_embedder;
    std::shared_ptr<LlmProvider> llm;
};

// Owns the course state: corpus, triple store, published knowledge snapshot,
// chat cache and cost table. With a data directory every mutation is
// persisted there:
//   settings.json  corpus/  triples.csv  extraction_report.jsonl
//   graph.json  cache.jsonl  cost_table.csv  ask_log.jsonl
// Mutations are serialized; asks run concurrently against whole snapshots.
class Engine {
public:
    // Loads settings.json (defaults when absent) and any persisted state.
    explicit Engine(std::string data_dir);
    // Empty data_dir keeps everything in memory.
    Engine(std::string data_dir, Settings settings, EngineProviders providers);

    const Settings& settings() const noexcept { return settings_; }
    const std::string& data_dir() const noexcept { return data_dir_; }

    std::vector<std::string> ingest_path(const std::string& path);
    std::size_t ingest_text(const std::string& doc_id, const std::string& title,
                            const std::string& body);

    // Runs extraction with the given provider, or the canned directory from
    // settings, or the configured LLM. Successful runs replace the triples of
    // their chunk in the store.
    ExtractReport extract(LlmProvider* llm = nullptr);

    std::vector<Triple> triples() const;
    Triple review(TripleId id, ReviewStatus status, const ReviewFlags& flags);
    std::size_t approve_all_pending();
    std::string export_triples_csv() const;
    TripleImport import_triples_csv(std::string_view bytes);

    BuildReport build_graph(bool include_pending = false);

    AskResponse ask(const AskRequest& req);

    KnowledgeGraph neighborhood(std::string_view entity, TraversalDepth depth) const;

    void flush_cache();
    Health health() const;
    KnowledgeSnapshot snapshot() const;
    const CostModel& cost_model() const noexcept { return cost_model_; }

private:
    std::string data_dir_;
    Settings settings_;
    EngineProviders providers_;
    CostModel cost_model_;

    mutable std::mutex mutate_mutex_;  // ingest/extract/review/build
    Corpus corpus_;
    TripleStore triples_;

    mutable std::mutex snapshot_mutex_;
    KnowledgeSnapshot snapshot_;

    ChatCache cache_;
    std::mutex cache_file_mutex_;
    std::mutex log_mutex_;

    void load_state();
    void publish(std::shared_ptr<const IndexedCorpus> corpus,
                 std::shared_ptr<const IndexedGraph> graph);
    void reindex_corpus_locked();
    void save_triples_locked() const;
    void persist_cache();
    std::string path(const std::string& name) const;
};

}  // namespace kgrag

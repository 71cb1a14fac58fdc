#pragma once

#include "kgrag/corpus.hpp"
#include "kgrag/embedding.hpp"
#include "kgrag/kg.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct RetrievalParams {
    std::size_t k = 5;
    TraversalDepth depth = TraversalDepth::max();
    std::size_t context_token_cap = 4000;

    void validate() const;  // k >= 1, cap >= 1
};

// Chunks with their embeddings; an immutable snapshot shared by readers.
struct IndexedCorpus {
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> embeddings;
    std::size_t document_count = 0;

    const Chunk* find_chunk(std::string_view chunk_id) const;
};

// Embeds every chunk. Embeddings for unchanged chunks are reused from previous.
IndexedCorpus index_corpus(const Corpus& corpus, EmbeddingProvider& embedder,
                           const IndexedCorpus* previous = nullptr);

// Graph plus one embedding per node, computed over the node context.
struct IndexedGraph {
    KnowledgeGraph graph;
    std::vector<EmbeddingVector> node_embeddings;
};

IndexedGraph index_graph(KnowledgeGraph graph, EmbeddingProvider& embedder);

struct SimilarityContext {
    std::vector<std::string> chunk_ids;
    std::vector<double> scores;
    std::string text;
};

struct ExpandedContext {
    std::vector<std::string> seed_node_ids;
    std::vector<double> seed_scores;
    std::vector<std::string> traversed_node_ids;  // full traversal, uncapped
    std::vector<std::string> context_node_ids;    // nodes whose context made it into text
    std::string text;
};

inline constexpr std::string_view kSimilarityLabel = "SIMILARITY CONTEXT:";
inline constexpr std::string_view kGraphLabel = "RELATED CONCEPTS (KNOWLEDGE GRAPH):";

// Exhaustive cosine ranking over all chunks, top-k, joined by blank lines and
// capped by dropping the lowest-ranked chunks.
SimilarityContext rag_retrieve(std::string_view query, const IndexedCorpus& corpus,
                               EmbeddingProvider& embedder, const RetrievalParams& params = {});
SimilarityContext rag_retrieve(const EmbeddingVector& query, const IndexedCorpus& corpus,
                               const RetrievalParams& params = {});

// Top-k seed nodes by cosine over node contexts, expanded with traverse_kg.
// Each node renders as "## <display_name>\n<context>"; the cap drops the
// latest-ordered non-seed nodes first and never drops a seed.
ExpandedContext kgr_retrieve(std::string_view query, const IndexedGraph& graph,
                             EmbeddingProvider& embedder, const RetrievalParams& params = {});
ExpandedContext kgr_retrieve(const EmbeddingVector& query, const IndexedGraph& graph,
                             const RetrievalParams& params = {});

// Similarity section first, then the graph section (omitted when empty).
// Over the cap, the graph tail goes first, then the similarity tail; the
// section labels count toward the cap.
std::string assemble_contexts(const SimilarityContext& sim, const ExpandedContext& exp,
                              std::size_t cap);

struct AssembledContext {
    std::string text;
    std::size_t similarity_tokens = 0;  // body tokens kept from sim.text
    std::size_t graph_tokens = 0;       // body tokens kept from exp.text
};

AssembledContext assemble_contexts_detailed(const SimilarityContext& sim,
                                            const ExpandedContext& exp, std::size_t cap);

nlohmann::json to_json(const SimilarityContext& sim);
nlohmann::json to_json(const ExpandedContext& exp);

}  // namespace kgrag

#include "kgrag/retrieval.hpp"

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <unordered_map>

namespace kgrag {

void RetrievalParams::validate() const {
    if (k < 1) throw ContractViolation("k must be >= 1");
    if (context_token_cap < 1) throw ContractViolation("context_token_cap must be >= 1");
}

const Chunk* IndexedCorpus::find_chunk(std::string_view chunk_id) const {
    auto it = std::lower_bound(chunks.begin(), chunks.end(), chunk_id,
                               [](const Chunk& c, std::string_view id) { return c.chunk_id < id; });
    return it != chunks.end() && it->chunk_id == chunk_id ? &*it : nullptr;
}

IndexedCorpus index_corpus(const Corpus& corpus, EmbeddingProvider& embedder,
                           const IndexedCorpus* previous) {
    IndexedCorpus out;
    out.chunks = corpus.chunks();
    // find_chunk relies on chunk_id order
    std::sort(out.chunks.begin(), out.chunks.end(),
              [](const Chunk& a, const Chunk& b) { return a.chunk_id < b.chunk_id; });
    out.document_count = corpus.document_count();
    out.embeddings.reserve(out.chunks.size());
    std::unordered_map<std::string_view, const EmbeddingVector*> reuse;
    if (previous != nullptr) {
        for (std::size_t i = 0; i < previous->chunks.size(); ++i) {
            reuse.emplace(previous->chunks[i].text, &previous->embeddings[i]);
        }
    }
    for (const auto& c : out.chunks) {
        auto it = reuse.find(c.text);
        if (it != reuse.end() && it->second->dim() == embedder.dim()) {
            out.embeddings.push_back(*it->second);
        } else {
            out.embeddings.push_back(embedder.embed(c.text));
        }
    }
    return out;
}

IndexedGraph index_graph(KnowledgeGraph graph, EmbeddingProvider& embedder) {
    IndexedGraph out{std::move(graph), {}};
    out.node_embeddings.reserve(out.graph.nodes().size());
    for (const auto& n : out.graph.nodes()) out.node_embeddings.push_back(embedder.embed(n.context));
    return out;
}

SimilarityContext rag_retrieve(std::string_view query, const IndexedCorpus& corpus,
                               EmbeddingProvider& embedder, const RetrievalParams& params) {
    params.validate();
    if (corpus.chunks.empty()) return {};
    return rag_retrieve(embedder.embed(query), corpus, params);
}

SimilarityContext rag_retrieve(const EmbeddingVector& query, const IndexedCorpus& corpus,
                               const RetrievalParams& params) {
    params.validate();
    SimilarityContext out;
    std::vector<double> scores(corpus.chunks.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = cosine_similarity(query, corpus.embeddings[i]);
    }
    std::size_t used = 0;
    for (std::size_t i : top_k_indices(scores, params.k)) {
        const Chunk& c = corpus.chunks[i];
        const std::size_t remaining = params.context_token_cap - used;
        if (c.token_count > remaining) {
            // only the best chunk is ever cut mid-way; lower ranks are dropped whole
            if (out.chunk_ids.empty()) {
                out.chunk_ids.push_back(c.chunk_id);
                out.scores.push_back(scores[i]);
                out.text = truncate_tokens(c.text, remaining);
            }
            break;
        }
        if (!out.text.empty()) out.text += "\n\n";
        out.text += c.text;
        out.chunk_ids.push_back(c.chunk_id);
        out.scores.push_back(scores[i]);
        used += c.token_count;
    }
    return out;
}

ExpandedContext kgr_retrieve(std::string_view query, const IndexedGraph& graph,
                             EmbeddingProvider& embedder, const RetrievalParams& params) {
    params.validate();
    if (graph.graph.empty()) return {};
    return kgr_retrieve(embedder.embed(query), graph, params);
}

ExpandedContext kgr_retrieve(const EmbeddingVector& query, const IndexedGraph& graph,
                             const RetrievalParams& params) {
    params.validate();
    ExpandedContext out;
    const auto& nodes = graph.graph.nodes();
    if (nodes.empty()) return out;
    std::vector<double> scores(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        scores[i] = cosine_similarity(query, graph.node_embeddings[i]);
    }
    for (std::size_t i : top_k_indices(scores, params.k)) {
        out.seed_node_ids.push_back(nodes[i].node_id);
        out.seed_scores.push_back(scores[i]);
    }
    out.traversed_node_ids = traverse_kg(graph.graph, out.seed_node_ids, params.depth);

    // seeds lead the traversal order, so a prefix walk keeps them all
    const std::size_t n_seeds = out.seed_node_ids.size();
    std::size_t used = 0;
    for (std::size_t pos = 0; pos < out.traversed_node_ids.size(); ++pos) {
        const KgNode* n = graph.graph.find_node(out.traversed_node_ids[pos]);
        const std::string section = "## " + n->display_name + "\n" + n->context;
        const std::size_t cost = count_tokens(section);
        if (pos >= n_seeds && used + cost > params.context_token_cap) break;
        if (!out.text.empty()) out.text += "\n\n";
        out.text += section;
        out.context_node_ids.push_back(n->node_id);
        used += cost;
    }
    return out;
}

AssembledContext assemble_contexts_detailed(const SimilarityContext& sim,
                                            const ExpandedContext& exp, std::size_t cap) {
    const std::size_t sim_label = count_tokens(kSimilarityLabel);
    const std::size_t graph_label = count_tokens(kGraphLabel);
    AssembledContext out;
    out.text = kSimilarityLabel;
    std::size_t budget = cap > sim_label ? cap - sim_label : 0;

    const std::size_t sim_tokens = count_tokens(sim.text);
    if (sim_tokens > budget) {
        const std::string cut = truncate_tokens(sim.text, budget);
        if (!cut.empty()) out.text += "\n" + cut;
        out.similarity_tokens = budget;
        return out;
    }
    if (!sim.text.empty()) out.text += "\n" + sim.text;
    out.similarity_tokens = sim_tokens;
    budget -= sim_tokens;

    if (exp.text.empty() || budget <= graph_label) return out;
    budget -= graph_label;
    out.text += "\n\n";
    out.text += kGraphLabel;
    out.text += "\n" + truncate_tokens(exp.text, budget);
    out.graph_tokens = std::min(budget, count_tokens(exp.text));
    return out;
}

std::string assemble_contexts(const SimilarityContext& sim, const ExpandedContext& exp,
                              std::size_t cap) {
    return assemble_contexts_detailed(sim, exp, cap).text;
}

nlohmann::json to_json(const SimilarityContext& sim) {
    return {{"chunk_ids", sim.chunk_ids}, {"scores", sim.scores}, {"context_text", sim.text}};
}

nlohmann::json to_json(const ExpandedContext& exp) {
    return {{"seed_node_ids", exp.seed_node_ids},
            {"node_ids", exp.traversed_node_ids},
            {"context_node_ids", exp.context_node_ids},
            {"context_text", exp.text}};
}

}  // namespace kgrag

#pragma once

#include "kgrag/corpus.hpp"

#include <nlohmann/json_fwd.hpp>

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

enum class ReviewStatus { pending, approved, rejected };

std::string_view to_string(ReviewStatus s) noexcept;
// Throws FormatError for anything but pending/approved/rejected.
ReviewStatus parse_review_status(std::string_view s);

// Expert validation criteria; unset until a reviewer records them.
struct ReviewFlags {
    std::optional<bool> precision;
    std::optional<bool> completeness;
    std::optional<bool> relevance;

    bool operator==(const ReviewFlags&) const = default;
};

struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;
    std::string source_chunk_id;
    ReviewStatus status = ReviewStatus::pending;
    ReviewFlags flags;

    bool operator==(const Triple&) const = default;
};

// Trims the three parts and rejects any that end up empty (ContractViolation).
Triple make_triple(std::string_view subject, std::string_view predicate, std::string_view object,
                   std::string source_chunk_id = {});

// Trim, collapse internal whitespace runs to one space, ASCII case-fold.
std::string canonical_entity_key(std::string_view surface);

using TripleId = std::size_t;

// Extracted triples plus their review state. Ids are positions in the store
// (row order of the exported CSV). Not internally synchronized.
class TripleStore {
public:
    TripleStore() = default;
    explicit TripleStore(std::vector<Triple> triples) : triples_(std::move(triples)) {}

    std::size_t size() const noexcept { return triples_.size(); }
    const std::vector<Triple>& triples() const noexcept { return triples_; }
    const Triple& at(TripleId id) const;

    TripleId add(Triple t);
    // Swaps in a fresh extraction result for one chunk. Reviewed triples whose
    // (subject, predicate, object) reappear keep their status and flags.
    void replace_chunk_triples(const std::string& chunk_id, std::vector<Triple> fresh);
    void replace_all(std::vector<Triple> triples) { triples_ = std::move(triples); }

    // Allowed: pending -> approved|rejected, or re-applying the current status.
    const Triple& set_review_status(TripleId id, ReviewStatus status, const ReviewFlags& flags);

    std::size_t count(ReviewStatus s) const noexcept;

private:
    std::vector<Triple> triples_;
};

inline constexpr std::string_view kTripleCsvHeader =
    "subject,predicate,object,source_chunk_id,status,precision,completeness,relevance";

struct CsvRowError {
    std::size_t line = 0;
    std::string message;
};

struct TripleImport {
    std::vector<Triple> triples;
    std::vector<CsvRowError> errors;
};

std::string export_triples_csv(std::span<const Triple> triples);
// Malformed rows are skipped and reported; a wrong header throws FormatError.
TripleImport import_triples_csv(std::string_view bytes);

struct KgNode {
    std::string node_id;
    std::string display_name;
    std::string context;

    bool operator==(const KgNode&) const = default;
};

struct KgEdge {
    std::string from_id;
    std::string to_id;
    std::string predicate;

    auto operator<=>(const KgEdge&) const = default;
};

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Validates unique node ids and edge endpoint closure (ContractViolation).
    static KnowledgeGraph from_parts(std::vector<KgNode> nodes, std::vector<KgEdge> edges,
                                     std::size_t built_from = 0,
                                     std::vector<std::string> warnings = {});

    bool empty() const noexcept { return nodes_.empty(); }
    // Sorted by node_id.
    const std::vector<KgNode>& nodes() const noexcept { return nodes_; }
    // Sorted, exact duplicates removed.
    const std::vector<KgEdge>& edges() const noexcept { return edges_; }
    std::size_t built_from() const noexcept { return built_from_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    std::optional<std::size_t> index_of(std::string_view node_id) const;
    const KgNode* find_node(std::string_view node_id) const;
    // Undirected adjacency by node index, ascending, self excluded.
    const std::vector<std::size_t>& neighbors(std::size_t index) const { return adjacency_[index]; }

private:
    std::vector<KgNode> nodes_;
    std::vector<KgEdge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
    std::size_t built_from_ = 0;
    std::vector<std::string> warnings_;
};

struct BuildOptions {
    std::set<ReviewStatus> include_status{ReviewStatus::approved};
    std::size_t node_context_cap = 2000;  // tokens
};

KnowledgeGraph build_graph(std::span<const Triple> triples, const Corpus& corpus,
                           const BuildOptions& opts = {});

// Number of undirected hops to expand; unset means the whole component.
struct TraversalDepth {
    std::optional<std::size_t> hops;

    static TraversalDepth max() { return {}; }
    static TraversalDepth limit(std::size_t n) { return {n}; }
    bool is_max() const noexcept { return !hops.has_value(); }
    std::string to_string() const;
    // "max" or a non-negative integer; throws ContractViolation otherwise.
    static TraversalDepth parse(std::string_view s);
};

// Breadth-first expansion from the seeds over undirected edges. Order: seeds
// as given (deduplicated), then each layer sorted by node_id.
// Throws NotFoundError for an unknown seed.
std::vector<std::string> traverse_kg(const KnowledgeGraph& graph,
                                     const std::vector<std::string>& seeds, TraversalDepth depth);

// Nodes within depth hops of the entity plus every edge between them.
KnowledgeGraph neighborhood(const KnowledgeGraph& graph, std::string_view entity_key,
                            TraversalDepth depth);

// {nodes:[{id,display_name,context}], edges:[{from,to,predicate}]}
nlohmann::json graph_to_json(const KnowledgeGraph& graph);
KnowledgeGraph graph_from_json(const nlohmann::json& j);

}  // namespace kgrag

#include "kgrag/kg.hpp"

#include "kgrag/csv.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <unordered_set>

namespace kgrag {

std::string_view to_string(ReviewStatus s) noexcept {
    switch (s) {
        case ReviewStatus::pending: return "pending";
        case ReviewStatus::approved: return "approved";
        case ReviewStatus::rejected: return "rejected";
    }
    return "pending";
}

ReviewStatus parse_review_status(std::string_view s) {
    if (s == "pending") return ReviewStatus::pending;
    if (s == "approved") return ReviewStatus::approved;
    if (s == "rejected") return ReviewStatus::rejected;
    throw FormatError("unknown review status '" + std::string(s) +
                      "' (expected pending, approved or rejected)");
}

Triple make_triple(std::string_view subject, std::string_view predicate, std::string_view object,
                   std::string source_chunk_id) {
    Triple t;
    t.subject = trim(subject);
    t.predicate = trim(predicate);
    t.object = trim(object);
    t.source_chunk_id = std::move(source_chunk_id);
    if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
        throw ContractViolation("triple subject, predicate and object must be non-empty");
    }
    return t;
}

std::string canonical_entity_key(std::string_view surface) {
    std::string out;
    bool pending_space = false;
    for (char c : surface) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

// ---- TripleStore ------------------------------------------------------------

const Triple& TripleStore::at(TripleId id) const {
    if (id >= triples_.size()) throw NotFoundError("no triple with id " + std::to_string(id));
    return triples_[id];
}

TripleId TripleStore::add(Triple t) {
    triples_.push_back(std::move(t));
    return triples_.size() - 1;
}

void TripleStore::replace_chunk_triples(const std::string& chunk_id, std::vector<Triple> fresh) {
    using Key = std::tuple<std::string, std::string, std::string>;
    std::map<Key, std::pair<ReviewStatus, ReviewFlags>> reviewed;
    for (const auto& t : triples_) {
        if (t.source_chunk_id == chunk_id && t.status != ReviewStatus::pending) {
            reviewed.emplace(Key{t.subject, t.predicate, t.object}, std::pair{t.status, t.flags});
        }
    }
    std::erase_if(triples_, [&](const Triple& t) { return t.source_chunk_id == chunk_id; });
    for (auto& t : fresh) {
        t.source_chunk_id = chunk_id;
        if (auto it = reviewed.find(Key{t.subject, t.predicate, t.object}); it != reviewed.end()) {
            t.status = it->second.first;
            t.flags = it->second.second;
        }
        triples_.push_back(std::move(t));
    }
}

const Triple& TripleStore::set_review_status(TripleId id, ReviewStatus status,
                                             const ReviewFlags& flags) {
    if (id >= triples_.size()) throw NotFoundError("no triple with id " + std::to_string(id));
    if (status == ReviewStatus::pending) {
        throw InvalidTransition("review status must be approved or rejected");
    }
    Triple& t = triples_[id];
    if (t.status != ReviewStatus::pending && t.status != status) {
        throw InvalidTransition("triple " + std::to_string(id) + " is already " +
                                std::string(to_string(t.status)));
    }
    t.status = status;
    t.flags = flags;
    return t;
}

std::size_t TripleStore::count(ReviewStatus s) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(triples_.begin(), triples_.end(), [&](const Triple& t) { return t.status == s; }));
}

// ---- CSV --------------------------------------------------------------------

namespace {

std::string flag_to_field(const std::optional<bool>& f) {
    if (!f) return "";
    return *f ? "true" : "false";
}

std::optional<bool> field_to_flag(const std::string& s, const char* name) {
    const std::string v = to_lower_ascii(trim(s));
    if (v.empty()) return std::nullopt;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw FormatError(std::string("bad ") + name + " flag '" + s + "'");
}

}  // namespace

std::string export_triples_csv(std::span<const Triple> triples) {
    std::string out = std::string(kTripleCsvHeader) + "\r\n";
    for (const auto& t : triples) {
        out += csv::format_row({t.subject, t.predicate, t.object, t.source_chunk_id,
                                std::string(to_string(t.status)), flag_to_field(t.flags.precision),
                                flag_to_field(t.flags.completeness),
                                flag_to_field(t.flags.relevance)});
    }
    return out;
}

TripleImport import_triples_csv(std::string_view bytes) {
    TripleImport result;
    if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);  // spreadsheet BOM
    const auto records = csv::parse(bytes);
    if (records.empty()) return result;
    {
        std::string header;
        for (std::size_t i = 0; i < records[0].fields.size(); ++i) {
            if (i) header.push_back(',');
            header += trim(records[0].fields[i]);
        }
        if (header != kTripleCsvHeader) {
            throw FormatError("triple CSV header must be '" + std::string(kTripleCsvHeader) + "'");
        }
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() == 1 && trim(rec.fields[0]).empty()) continue;  // blank line
        if (rec.fields.size() != 8) {
            result.errors.push_back({rec.line, "expected 8 columns, got " +
                                                   std::to_string(rec.fields.size())});
            continue;
        }
        try {
            Triple t = make_triple(rec.fields[0], rec.fields[1], rec.fields[2], rec.fields[3]);
            t.status = parse_review_status(trim(rec.fields[4]));
            t.flags.precision = field_to_flag(rec.fields[5], "precision");
            t.flags.completeness = field_to_flag(rec.fields[6], "completeness");
            t.flags.relevance = field_to_flag(rec.fields[7], "relevance");
            result.triples.push_back(std::move(t));
        } catch (const Error& e) {
            result.errors.push_back({rec.line, e.what()});
        }
    }
    return result;
}

// ---- KnowledgeGraph ---------------------------------------------------------

KnowledgeGraph KnowledgeGraph::from_parts(std::vector<KgNode> nodes, std::vector<KgEdge> edges,
                                          std::size_t built_from,
                                          std::vector<std::string> warnings) {
    KnowledgeGraph g;
    std::sort(nodes.begin(), nodes.end(),
              [](const KgNode& a, const KgNode& b) { return a.node_id < b.node_id; });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].node_id.empty()) throw ContractViolation("node id must be non-empty");
        if (i && nodes[i].node_id == nodes[i - 1].node_id) {
            throw ContractViolation("duplicate node id '" + nodes[i].node_id + "'");
        }
    }
    g.nodes_ = std::move(nodes);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.adjacency_.resize(g.nodes_.size());
    for (const auto& e : edges) {
        const auto a = g.index_of(e.from_id);
        const auto b = g.index_of(e.to_id);
        if (!a || !b) {
            throw ContractViolation("edge " + e.from_id + " -> " + e.to_id +
                                    " references a missing node");
        }
        if (*a != *b) {
            g.adjacency_[*a].push_back(*b);
            g.adjacency_[*b].push_back(*a);
        }
    }
    for (auto& adj : g.adjacency_) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    g.edges_ = std::move(edges);
    g.built_from_ = built_from;
    g.warnings_ = std::move(warnings);
    return g;
}

std::optional<std::size_t> KnowledgeGraph::index_of(std::string_view node_id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node_id,
                               [](const KgNode& n, std::string_view id) { return n.node_id < id; });
    if (it == nodes_.end() || it->node_id != node_id) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
}

const KgNode* KnowledgeGraph::find_node(std::string_view node_id) const {
    const auto i = index_of(node_id);
    return i ? &nodes_[*i] : nullptr;
}

KnowledgeGraph build_graph(std::span<const Triple> triples, const Corpus& corpus,
                           const BuildOptions& opts) {
    if (opts.include_status.contains(ReviewStatus::rejected)) {
        throw ContractViolation("rejected triples cannot be included in a graph build");
    }
    struct Pending {
        std::string display_name;
        std::set<std::string> chunk_ids;
        bool missing_chunk = false;
    };
    std::map<std::string, Pending> entities;
    std::vector<KgEdge> edges;
    std::vector<std::string> warnings;
    std::size_t used = 0;

    for (std::size_t i = 0; i < triples.size(); ++i) {
        const Triple& t = triples[i];
        if (!opts.include_status.contains(t.status)) continue;
        const std::string s = canonical_entity_key(t.subject);
        const std::string o = canonical_entity_key(t.object);
        if (s.empty() || o.empty() || trim(t.predicate).empty()) {
            warnings.push_back("triple " + std::to_string(i) + " has an empty field; skipped");
            continue;
        }
        ++used;
        const bool chunk_found = corpus.find_chunk(t.source_chunk_id) != nullptr;
        if (!chunk_found) {
            warnings.push_back("triple " + std::to_string(i) + " references missing chunk '" +
                               t.source_chunk_id + "'");
        }
        for (const auto& [key, surface] : {std::pair{s, &t.subject}, std::pair{o, &t.object}}) {
            auto [it, inserted] = entities.try_emplace(key);
            if (inserted) it->second.display_name = trim(*surface);
            if (chunk_found) {
                it->second.chunk_ids.insert(t.source_chunk_id);
            } else {
                it->second.missing_chunk = true;
            }
        }
        edges.push_back({s, o, trim(t.predicate)});
    }

    std::vector<KgNode> nodes;
    nodes.reserve(entities.size());
    for (auto& [key, p] : entities) {
        KgNode n{key, p.display_name, {}};
        if (p.chunk_ids.empty()) {
            n.context = p.display_name;
        } else {
            std::string joined;
            for (const auto& cid : p.chunk_ids) {
                if (!joined.empty()) joined += "\n\n";
                joined += corpus.find_chunk(cid)->text;
            }
            n.context = truncate_tokens(joined, opts.node_context_cap);
        }
        nodes.push_back(std::move(n));
    }
    return KnowledgeGraph::from_parts(std::move(nodes), std::move(edges), used, std::move(warnings));
}

// ---- Traversal --------------------------------------------------------------

std::string TraversalDepth::to_string() const {
    return hops ? std::to_string(*hops) : std::string("max");
}

TraversalDepth TraversalDepth::parse(std::string_view s) {
    if (s == "max") return max();
    if (s.empty() || s.size() > 9 ||
        !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ContractViolation("depth must be 'max' or a non-negative integer, got '" +
                                std::string(s) + "'");
    }
    return limit(static_cast<std::size_t>(std::stoul(std::string(s))));
}

namespace {

std::vector<std::size_t> traverse_indices(const KnowledgeGraph& graph,
                                          const std::vector<std::size_t>& seeds,
                                          TraversalDepth depth) {
    std::vector<char> visited(graph.nodes().size(), 0);
    std::vector<std::size_t> order;
    std::vector<std::size_t> layer;
    for (std::size_t s : seeds) {
        if (!visited[s]) {
            visited[s] = 1;
            order.push_back(s);
            layer.push_back(s);
        }
    }
    std::size_t hop = 0;
    while (!layer.empty() && (depth.is_max() || hop < *depth.hops)) {
        std::vector<std::size_t> next;
        for (std::size_t u : layer) {
            for (std::size_t v : graph.neighbors(u)) {
                if (!visited[v]) {
                    visited[v] = 1;
                    next.push_back(v);
                }
            }
        }
        // node index order is node_id order
        std::sort(next.begin(), next.end());
        order.insert(order.end(), next.begin(), next.end());
        layer = std::move(next);
        ++hop;
    }
    return order;
}

}  // namespace

std::vector<std::string> traverse_kg(const KnowledgeGraph& graph,
                                     const std::vector<std::string>& seeds, TraversalDepth depth) {
    std::vector<std::size_t> seed_idx;
    seed_idx.reserve(seeds.size());
    for (const auto& s : seeds) {
        const auto i = graph.index_of(s);
        if (!i) throw NotFoundError("unknown node id '" + s + "'");
        seed_idx.push_back(*i);
    }
    std::vector<std::string> out;
    for (std::size_t i : traverse_indices(graph, seed_idx, depth)) out.push_back(graph.nodes()[i].node_id);
    return out;
}

KnowledgeGraph neighborhood(const KnowledgeGraph& graph, std::string_view entity_key,
                            TraversalDepth depth) {
    const std::string key = canonical_entity_key(entity_key);
    const auto start = graph.index_of(key);
    if (!start) throw NotFoundError("unknown entity '" + key + "'");
    const auto members = traverse_indices(graph, {*start}, depth);
    std::unordered_set<std::string> keep;
    std::vector<KgNode> nodes;
    for (std::size_t i : members) {
        nodes.push_back(graph.nodes()[i]);
        keep.insert(graph.nodes()[i].node_id);
    }
    std::vector<KgEdge> edges;
    for (const auto& e : graph.edges()) {
        if (keep.contains(e.from_id) && keep.contains(e.to_id)) edges.push_back(e);
    }
    return KnowledgeGraph::from_parts(std::move(nodes), std::move(edges), graph.built_from());
}

nlohmann::json graph_to_json(const KnowledgeGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes()) {
        nodes.push_back({{"id", n.node_id}, {"display_name", n.display_name}, {"context", n.context}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges()) {
        edges.push_back({{"from", e.from_id}, {"to", e.to_id}, {"predicate", e.predicate}});
    }
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

KnowledgeGraph graph_from_json(const nlohmann::json& j) {
    try {
        std::vector<KgNode> nodes;
        for (const auto& n : j.at("nodes")) {
            nodes.push_back({n.at("id").get<std::string>(), n.at("display_name").get<std::string>(),
                             n.at("context").get<std::string>()});
        }
        std::vector<KgEdge> edges;
        for (const auto& e : j.at("edges")) {
            edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                             e.at("predicate").get<std::string>()});
        }
        const std::size_t built_from = j.value("built_from", std::size_t{0});
        auto warnings = j.value("warnings", std::vector<std::string>{});
        return KnowledgeGraph::from_parts(std::move(nodes), std::move(edges), built_from,
                                          std::move(warnings));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed graph JSON: ") + e.what());
    }
}

}  // namespace kgrag

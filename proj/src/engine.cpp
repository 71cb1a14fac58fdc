#include "kgrag/engine.hpp"

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace kgrag {

namespace {

EngineProviders providers_from_settings(const Settings& s) {
    auto transport = make_http_transport();
    return {make_embedder(s.embedding, transport), make_embedder(s.cache_embedding, transport),
            make_llm(s.llm, transport)};
}

Settings settings_for(const std::string& data_dir) {
    if (data_dir.empty()) return {};
    return Settings::load((fs::path(data_dir) / "settings.json").string());
}

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

Engine::Engine(std::string data_dir) : Engine(data_dir, settings_for(data_dir), {}) {}

Engine::Engine(std::string data_dir, Settings settings, EngineProviders providers)
    : data_dir_(std::move(data_dir)),
      settings_(std::move(settings)),
      providers_(std::move(providers)),
      cost_model_(default_cost_model()),
      corpus_(settings_.corpus),
      cache_(settings_.cache) {
    if (!providers_.embedder || !providers_.cache_embedder || !providers_.llm) {
        auto defaults = providers_from_settings(settings_);
        if (!providers_.embedder) providers_.embedder = defaults.embedder;
        if (!providers_.cache_embedder) providers_.cache_embedder = defaults.cache_embedder;
        if (!providers_.llm) providers_.llm = defaults.llm;
    }
    load_state();
}

std::string Engine::path(const std::string& name) const {
    return (fs::path(data_dir_) / name).string();
}

void Engine::load_state() {
    std::shared_ptr<const IndexedGraph> graph;
    if (!data_dir_.empty()) {
        fs::create_directories(data_dir_);
        if (!fs::exists(path("settings.json"))) {
            write_file_atomic(path("settings.json"), settings_.to_json().dump(2) + "\n");
        }
        if (!fs::exists(path("cost_table.csv"))) {
            write_file_atomic(path("cost_table.csv"), default_cost_table_csv());
        }
        cost_model_ = CostModel::from_csv(read_file(path("cost_table.csv")));
        corpus_ = Corpus::load(path("corpus"), settings_.corpus);
        if (fs::exists(path("triples.csv"))) {
            auto imported = kgrag::import_triples_csv(read_file(path("triples.csv")));
            if (!imported.errors.empty()) {
                throw FormatError(path("triples.csv") + " line " +
                                  std::to_string(imported.errors.front().line) + ": " +
                                  imported.errors.front().message);
            }
            triples_.replace_all(std::move(imported.triples));
        }
        if (fs::exists(path("graph.json"))) {
            auto g = graph_from_json(nlohmann::json::parse(read_file(path("graph.json"))));
            graph = std::make_shared<const IndexedGraph>(index_graph(std::move(g), *providers_.embedder));
        }
        if (fs::exists(path("cache.jsonl"))) cache_.load_jsonl(read_file(path("cache.jsonl")));
    }
    publish(std::make_shared<const IndexedCorpus>(index_corpus(corpus_, *providers_.embedder)), graph);
}

void Engine::publish(std::shared_ptr<const IndexedCorpus> corpus,
                     std::shared_ptr<const IndexedGraph> graph) {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = KnowledgeSnapshot{std::move(corpus), std::move(graph)};
}

KnowledgeSnapshot Engine::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

void Engine::reindex_corpus_locked() {
    const auto current = snapshot();
    // TODO: persist chunk embeddings so a remote embedder is not re-queried for the whole corpus on restart
    auto indexed = std::make_shared<const IndexedCorpus>(
        index_corpus(corpus_, *providers_.embedder, current.corpus.get()));
    publish(std::move(indexed), current.graph);
}

std::vector<std::string> Engine::ingest_path(const std::string& p) {
    std::lock_guard lock(mutate_mutex_);
    auto ids = corpus_.ingest_path(p);
    if (!data_dir_.empty()) corpus_.save(path("corpus"));
    reindex_corpus_locked();
    return ids;
}

std::size_t Engine::ingest_text(const std::string& doc_id, const std::string& title,
                                const std::string& body) {
    std::lock_guard lock(mutate_mutex_);
    const std::size_t n = corpus_.ingest_text(doc_id, title, body);
    if (!data_dir_.empty()) corpus_.save(path("corpus"));
    reindex_corpus_locked();
    return n;
}

ExtractReport Engine::extract(LlmProvider* llm) {
    std::lock_guard lock(mutate_mutex_);
    std::optional<CannedLlm> canned;
    if (llm == nullptr && !settings_.extraction_canned_dir.empty()) {
        canned.emplace(CannedLlm::from_directory(settings_.extraction_canned_dir));
        llm = &*canned;
    }
    if (llm == nullptr) llm = providers_.llm.get();

    ExtractionOptions opts;
    opts.max_in_flight = settings_.extraction_in_flight;
    ExtractReport report;
    try {
        report.runs = extract_corpus(corpus_, *llm, {}, opts);
    } catch (const ExtractionFailed& e) {
        if (!data_dir_.empty()) write_file_atomic(path("extraction_report.jsonl"), runs_to_jsonl(e.runs()));
        throw;
    }
    for (const auto& run : report.runs) {
        if (!run.ok()) {
            ++report.failed_runs;
            continue;
        }
        triples_.replace_chunk_triples(run.chunk_id, run.parsed);
        report.triples_added += run.parsed.size();
    }
    if (!data_dir_.empty()) {
        write_file_atomic(path("extraction_report.jsonl"), runs_to_jsonl(report.runs));
        save_triples_locked();
    }
    return report;
}

std::vector<Triple> Engine::triples() const {
    std::lock_guard lock(mutate_mutex_);
    return triples_.triples();
}

Triple Engine::review(TripleId id, ReviewStatus status, const ReviewFlags& flags) {
    std::lock_guard lock(mutate_mutex_);
    Triple t = triples_.set_review_status(id, status, flags);
    save_triples_locked();
    return t;
}

std::size_t Engine::approve_all_pending() {
    std::lock_guard lock(mutate_mutex_);
    std::size_t n = 0;
    for (TripleId id = 0; id < triples_.size(); ++id) {
        if (triples_.at(id).status == ReviewStatus::pending) {
            triples_.set_review_status(id, ReviewStatus::approved, {});
            ++n;
        }
    }
    save_triples_locked();
    return n;
}

std::string Engine::export_triples_csv() const {
    std::lock_guard lock(mutate_mutex_);
    return kgrag::export_triples_csv(triples_.triples());
}

TripleImport Engine::import_triples_csv(std::string_view bytes) {
    std::lock_guard lock(mutate_mutex_);
    auto result = kgrag::import_triples_csv(bytes);
    triples_.replace_all(result.triples);
    save_triples_locked();
    return result;
}

void Engine::save_triples_locked() const {
    if (data_dir_.empty()) return;
    write_file_atomic(path("triples.csv"), kgrag::export_triples_csv(triples_.triples()));
}

BuildReport Engine::build_graph(bool include_pending) {
    std::lock_guard lock(mutate_mutex_);
    BuildOptions opts;
    opts.node_context_cap = settings_.node_context_cap;
    if (include_pending) opts.include_status.insert(ReviewStatus::pending);
    KnowledgeGraph g = kgrag::build_graph(triples_.triples(), corpus_, opts);

    BuildReport report{g.nodes().size(), g.edges().size(), g.built_from(), g.warnings()};
    if (report.triples_used == 0) report.warnings.push_back("no approved triples: the graph is empty");

    if (!data_dir_.empty()) {
        auto j = graph_to_json(g);
        j["built_from"] = g.built_from();
        j["warnings"] = g.warnings();
        write_file_atomic(path("graph.json"), j.dump(2));
    }
    auto indexed = std::make_shared<const IndexedGraph>(index_graph(std::move(g), *providers_.embedder));
    publish(snapshot().corpus, std::move(indexed));
    return report;
}

AskResponse Engine::ask(const AskRequest& req) {
    const auto started = std::chrono::steady_clock::now();
    const std::string query = trim(req.query);
    if (query.empty()) throw ContractViolation("query must not be empty");

    const KnowledgeSnapshot snap = snapshot();
    if (req.mode == AnswerMode::kgrag && !snap.graph) {
        throw ConfigurationError("kgrag mode needs a built knowledge graph; run build first");
    }

    AskResponse resp;
    std::optional<EmbeddingVector> cache_key;
    if (req.use_cache) {
        cache_key = providers_.cache_embedder->embed(query);
        auto hit = cache_.lookup(*cache_key, req.mode);
        if (hit.hit) resp.answer = hit.hit->answer;
    }
    if (!resp.answer.cache_hit) {
        GenerationParams params;
        params.retrieval = settings_.retrieval;
        params.combined_token_cap = settings_.combined_token_cap;
        resp.answer = generate(query, req.mode, snap,
                               {providers_.embedder.get(), providers_.llm.get()}, params);
        if (cache_key) {
            cache_.insert(query, *cache_key, resp.answer);
            persist_cache();
        }
    }
    resp.cost_estimate_usd =
        estimate_cost(cost_model_, settings_.cost_provider, 1.0, resp.answer.cache_hit ? 1.0 : 0.0);
    resp.timing_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();

    if (!data_dir_.empty()) {
        const nlohmann::json line = {{"ts_ms", now_ms()},
                                     {"session_id", req.session_id},
                                     {"mode", to_string(req.mode)},
                                     {"cache_hit", resp.answer.cache_hit},
                                     {"timing_ms", resp.timing_ms}};
        std::lock_guard lock(log_mutex_);
        std::ofstream(path("ask_log.jsonl"), std::ios::app) << line.dump() << '\n';
    }
    return resp;
}

void Engine::persist_cache() {
    if (data_dir_.empty()) return;
    std::lock_guard lock(cache_file_mutex_);
    write_file_atomic(path("cache.jsonl"), cache_.to_jsonl());
}

KnowledgeGraph Engine::neighborhood(std::string_view entity, TraversalDepth depth) const {
    const auto snap = snapshot();
    if (!snap.graph) throw ConfigurationError("no knowledge graph has been built");
    return kgrag::neighborhood(snap.graph->graph, entity, depth);
}

void Engine::flush_cache() {
    cache_.clear();
    persist_cache();
}

Health Engine::health() const {
    const auto snap = snapshot();
    Health h;
    h.doc_count = snap.corpus ? snap.corpus->document_count : 0;
    h.chunk_count = snap.corpus ? snap.corpus->chunks.size() : 0;
    h.graph_built = static_cast<bool>(snap.graph);
    if (snap.graph) {
        h.node_count = snap.graph->graph.nodes().size();
        h.edge_count = snap.graph->graph.edges().size();
    }
    h.cache_size = cache_.size();
    std::lock_guard lock(mutate_mutex_);
    h.triple_count = triples_.size();
    h.approved_triples = triples_.count(ReviewStatus::approved);
    return h;
}

}  // namespace kgrag

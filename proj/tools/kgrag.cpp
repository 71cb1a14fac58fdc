// kgrag command line: course ingestion, triple review, graph build, asking
// and the HTTP service. State lives in --data-dir (or $KGRAG_DATA_DIR).

#include "kgrag/api.hpp"
#include "kgrag/cost.hpp"
#include "kgrag/engine.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

std::string default_data_dir() {
    const char* env = std::getenv("KGRAG_DATA_DIR");
    return env != nullptr && *env != '\0' ? env : "kgrag-data";
}

std::optional<bool> parse_flag(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw kgrag::ContractViolation("flag values must be true or false, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph enhanced retrieval tutor"};
    app.require_subcommand(1);
    std::string data_dir = default_data_dir();
    app.add_option("--data-dir", data_dir, "State directory (env KGRAG_DATA_DIR)");

    auto* ingest = app.add_subcommand("ingest", "Ingest .txt/.md files or directories");
    std::vector<std::string> ingest_paths;
    ingest->add_option("paths", ingest_paths)->required();

    auto* extract = app.add_subcommand("extract", "Extract triples from every chunk");
    std::string canned_dir;
    extract->add_option("--canned", canned_dir, "Replay <chunk_id>.txt outputs from this directory");

    auto* review = app.add_subcommand("review", "Expert review of extracted triples");
    review->require_subcommand(1);
    auto* review_export = review->add_subcommand("export", "Write triples to CSV");
    std::string export_path;
    review_export->add_option("csv", export_path)->required();
    auto* review_import = review->add_subcommand("import", "Replace triples from a reviewed CSV");
    std::string import_path;
    review_import->add_option("csv", import_path)->required()->check(CLI::ExistingFile);
    auto* review_set = review->add_subcommand("set", "Approve or reject one triple");
    std::size_t review_id = 0;
    std::string review_status, precision, completeness, relevance;
    review_set->add_option("triple_id", review_id)->required();
    review_set->add_option("status", review_status)->required()->check(CLI::IsMember({"approved", "rejected"}));
    review_set->add_option("--precision", precision);
    review_set->add_option("--completeness", completeness);
    review_set->add_option("--relevance", relevance);
    auto* review_all = review->add_subcommand("approve-all", "Approve every pending triple");
    auto* review_list = review->add_subcommand("list", "Print triples with their ids");

    auto* build = app.add_subcommand("build", "Build the knowledge graph from reviewed triples");
    bool include_pending = false;
    build->add_flag("--include-pending", include_pending, "Also use unreviewed triples");

    auto* ask = app.add_subcommand("ask", "Answer one question");
    std::string question, mode = "kgrag", session = "cli";
    bool no_cache = false, as_json = false;
    ask->add_option("question", question)->required();
    ask->add_option("--mode", mode)->check(CLI::IsMember({"llm_only", "rag", "kgrag"}));
    ask->add_option("--session", session);
    ask->add_flag("--no-cache", no_cache);
    ask->add_flag("--json", as_json, "Print the full response as JSON");

    auto* hood = app.add_subcommand("neighborhood", "Print the graph around an entity as JSON");
    std::string entity, depth = "1";
    hood->add_option("entity", entity)->required();
    hood->add_option("--depth", depth, "Hops or 'max'");

    auto* status = app.add_subcommand("status", "Print corpus/graph/cache counts");

    auto* cache = app.add_subcommand("cache", "Chat cache maintenance");
    cache->require_subcommand(1);
    auto* cache_flush = cache->add_subcommand("flush", "Drop every cached answer");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string host = "127.0.0.1", ui_dir;
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--ui-dir", ui_dir, "Static chat UI served at /");

    auto* cost = app.add_subcommand("cost", "Estimate LLM spend");
    std::string provider = "DeepSeek-V3", cost_table, versus;
    double n_queries = 1, hit_rate = 0;
    cost->add_option("--provider", provider);
    cost->add_option("--n", n_queries)->check(CLI::NonNegativeNumber);
    cost->add_option("--hit-rate", hit_rate)->check(CLI::Range(0.0, 1.0));
    cost->add_option("--cost-table", cost_table, "CSV provider,cost_per_qa_usd")->check(CLI::ExistingFile);
    cost->add_option("--vs", versus, "Also print the cost ratio against this provider");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cost->parsed()) {
            const kgrag::CostModel model = cost_table.empty()
                                               ? kgrag::default_cost_model()
                                               : kgrag::CostModel::from_csv(kgrag::read_file(cost_table));
            std::printf("%.6g\n", kgrag::estimate_cost(model, provider, n_queries, hit_rate));
            if (!versus.empty()) {
                std::printf("ratio %s/%s = %.4g\n", provider.c_str(), versus.c_str(),
                            kgrag::cost_ratio(model, provider, versus));
            }
            return 0;
        }

        kgrag::Engine engine(data_dir);

        if (ingest->parsed()) {
            for (const auto& p : ingest_paths) {
                for (const auto& id : engine.ingest_path(p)) std::cout << "ingested " << id << '\n';
            }
            const auto h = engine.health();
            std::cout << h.doc_count << " documents, " << h.chunk_count << " chunks\n";
        } else if (extract->parsed()) {
            kgrag::ExtractReport report;
            if (!canned_dir.empty()) {
                auto llm = kgrag::CannedLlm::from_directory(canned_dir);
                report = engine.extract(&llm);
            } else {
                report = engine.extract();
            }
            for (const auto& r : report.runs) {
                if (!r.ok()) std::cerr << "chunk " << r.chunk_id << " failed: " << *r.error << '\n';
                for (const auto& w : r.warnings) std::cerr << "chunk " << r.chunk_id << ": " << w << '\n';
            }
            std::cout << report.runs.size() << " runs, " << report.failed_runs << " failed, "
                      << report.triples_added << " triples pending review\n";
        } else if (review_export->parsed()) {
            kgrag::write_file_atomic(export_path, engine.export_triples_csv());
            std::cout << "wrote " << engine.triples().size() << " triples to " << export_path << '\n';
        } else if (review_import->parsed()) {
            const auto result = engine.import_triples_csv(kgrag::read_file(import_path));
            for (const auto& e : result.errors) {
                std::cerr << import_path << ":" << e.line << ": " << e.message << '\n';
            }
            std::cout << "imported " << result.triples.size() << " triples";
            if (!result.errors.empty()) std::cout << ", " << result.errors.size() << " rows rejected";
            std::cout << '\n';
            if (!result.errors.empty()) return 2;
        } else if (review_set->parsed()) {
            kgrag::ReviewFlags flags{parse_flag(precision), parse_flag(completeness), parse_flag(relevance)};
            const auto t = engine.review(review_id, kgrag::parse_review_status(review_status), flags);
            std::cout << review_id << ": [" << t.subject << ", " << t.predicate << ", " << t.object
                      << "] " << kgrag::to_string(t.status) << '\n';
        } else if (review_all->parsed()) {
            std::cout << "approved " << engine.approve_all_pending() << " triples\n";
        } else if (review_list->parsed()) {
            const auto all = engine.triples();
            for (std::size_t i = 0; i < all.size(); ++i) {
                std::cout << i << '\t' << kgrag::to_string(all[i].status) << "\t[" << all[i].subject
                          << ", " << all[i].predicate << ", " << all[i].object << "]\t"
                          << all[i].source_chunk_id << '\n';
            }
        } else if (build->parsed()) {
            const auto r = engine.build_graph(include_pending);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "graph: " << r.node_count << " nodes, " << r.edge_count << " edges from "
                      << r.triples_used << " triples\n";
        } else if (ask->parsed()) {
            kgrag::AskRequest req{session, question, *kgrag::parse_answer_mode(mode), !no_cache};
            const auto resp = engine.ask(req);
            if (as_json) {
                std::cout << kgrag::to_json(resp).dump(2) << '\n';
            } else {
                std::cout << resp.answer.answer_text << "\n\n";
                std::cout << "[mode " << mode << (resp.answer.cache_hit ? ", cache hit" : "") << ", "
                          << resp.answer.chunks.size() << " chunks, " << resp.answer.nodes.size()
                          << " graph nodes]\n";
            }
        } else if (hood->parsed()) {
            kgrag::Api api(engine);
            const auto r = api.neighborhood(entity, depth);
            std::cout << r.body.dump(2) << '\n';
            if (r.status != 200) return 1;
        } else if (status->parsed()) {
            std::cout << kgrag::to_json(engine.health()).dump(2) << '\n';
        } else if (cache_flush->parsed()) {
            engine.flush_cache();
            std::cout << "cache flushed\n";
        } else if (serve->parsed()) {
            kgrag::HttpServer server(engine, ui_dir);
            const int bound = server.bind(host, port);
            std::cout << "listening on http://" << host << ":" << bound << std::endl;
            server.listen();
        }
    } catch (const kgrag::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

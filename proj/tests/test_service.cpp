#include "kgrag/api.hpp"
#include "kgrag/engine.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

#include "doctest.h"
#include "schema_check.hpp"
#include "test_support.hpp"

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

using namespace kgrag;
using nlohmann::json;

namespace {

// In-memory engine loaded with the reviewed finance fixture (graph not built).
struct Service {
    Engine engine{"", Settings{}, {}};
    Api api{engine};

    Service() {
        engine.ingest_path(testing::fixture("finance/docs"));
        auto llm = CannedLlm::from_directory(testing::fixture("finance/canned"));
        engine.extract(&llm);
    }

    void review_fixture() {
        const auto all = engine.triples();
        for (std::size_t i = 0; i < all.size(); ++i) {
            const bool bad = all[i].subject == "Duration" && all[i].object == "Bond";
            engine.review(i, bad ? ReviewStatus::rejected : ReviewStatus::approved, {});
        }
    }
};

json ask_body(const std::string& q, const std::string& mode, bool cache = true) {
    return {{"session_id", "s1"}, {"query", q}, {"mode", mode}, {"use_cache", cache}};
}

std::set<std::string> ids_of(const json& arr, const char* key) {
    std::set<std::string> out;
    for (const auto& x : arr) out.insert(x[key].get<std::string>());
    return out;
}

void check_schema(const json& body, const std::string& schema) {
    const auto errors = testing::schema_errors(body, schema);
    for (const auto& e : errors) MESSAGE(schema << ": " << e);
    CHECK(errors.empty());
}

}  // namespace

TEST_CASE("error mapping") {
    CHECK(error_response(ContractViolation("x")).status == 400);
    CHECK(error_response(FormatError("x")).status == 400);
    CHECK(error_response(EncodingError("x")).status == 400);
    CHECK(error_response(IngestError("p", "x")).status == 400);
    CHECK(error_response(NotFoundError("x")).status == 404);
    CHECK(error_response(ConfigurationError("x")).status == 409);
    CHECK(error_response(InvalidTransition("x")).status == 409);
    const auto provider = error_response(ProviderError("down", 503, 3));
    CHECK(provider.status == 502);
    CHECK(provider.body["attempts"] == 3);
    check_schema(provider.body, "error");
    CHECK(error_response(PipelineError("x")).status == 502);
    CHECK(error_response(std::runtime_error("x")).status == 500);
}

TEST_CASE("ask validation") {
    Service s;
    auto r = s.api.ask(ask_body("What is duration?", "banana").dump());
    CHECK(r.status == 400);
    CHECK(r.body["allowed_modes"] == json({"llm_only", "rag", "kgrag"}));
    check_schema(r.body, "error");

    CHECK(s.api.ask(ask_body("   ", "rag").dump()).status == 400);
    CHECK(s.api.ask("{not json").status == 400);

    r = s.api.ask(ask_body("What is duration?", "kgrag").dump());
    CHECK(r.status == 409);
    check_schema(r.body, "error");
    CHECK(s.api.ask(ask_body("What is duration?", "rag").dump()).status == 200);
}

TEST_CASE("asking twice hits the cache") {
    Service s;
    const auto first = s.api.ask(ask_body("What is a mortgage-backed security?", "rag").dump());
    REQUIRE(first.status == 200);
    CHECK(first.body["cache_hit"] == false);
    check_schema(first.body, "ask_response");
    const auto second = s.api.ask(ask_body("What is a mortgage-backed security?", "rag").dump());
    REQUIRE(second.status == 200);
    CHECK(second.body["cache_hit"] == true);
    CHECK(second.body["answer_text"] == first.body["answer_text"]);
    CHECK(second.body["chunk_refs"] == first.body["chunk_refs"]);
    CHECK(second.body["cost_estimate_usd"] == 0.0);
    CHECK(first.body["cost_estimate_usd"].get<double>() == doctest::Approx(2.18e-4));

    const auto bypass = s.api.ask(ask_body("What is a mortgage-backed security?", "rag", false).dump());
    CHECK(bypass.body["cache_hit"] == false);

    CHECK(s.api.flush_cache().status == 200);
    CHECK(s.api.health().body["cache_size"] == 0);
    CHECK(s.api.ask(ask_body("What is a mortgage-backed security?", "rag").dump()).body["cache_hit"] == false);
}

TEST_CASE("kgrag answer cites the connected concepts") {
    Service s;
    s.review_fixture();
    const auto build = s.api.build("{}");
    REQUIRE(build.status == 200);
    check_schema(build.body, "build_report");
    CHECK(build.body["node_count"] == 17);
    CHECK(build.body["edge_count"] == 16);
    CHECK(build.body["triples_used"] == 16);

    const auto r = s.api.ask(ask_body("What are the connections between MBS, CDOs, and Sub-Prime Crisis?", "kgrag").dump());
    REQUIRE(r.status == 200);
    check_schema(r.body, "ask_response");
    const auto nodes = ids_of(r.body["node_refs"], "node_id");
    CHECK(nodes.contains("mortgage-backed securities"));
    CHECK(nodes.contains("collateralized debt obligations"));
    CHECK(nodes.contains("sub-prime crisis"));
    CHECK(r.body["mode"] == "kgrag");
}

TEST_CASE("neighborhood endpoint") {
    Service s;
    CHECK(s.api.neighborhood("duration", "1").status == 409);
    s.review_fixture();
    s.api.build("{}");

    auto r = s.api.neighborhood("Mortgage-Backed Securities", "1");
    REQUIRE(r.status == 200);
    check_schema(r.body, "neighborhood");
    // direct neighbours read off the fixture triples
    CHECK(ids_of(r.body["nodes"], "id") ==
          std::set<std::string>{"mortgage-backed securities", "sub-prime crisis", "fixed-income securities",
                                "mortgage loans", "collateralized debt obligations"});
    for (const auto& e : r.body["edges"]) {
        CHECK(ids_of(r.body["nodes"], "id").contains(e["from"].get<std::string>()));
        CHECK(ids_of(r.body["nodes"], "id").contains(e["to"].get<std::string>()));
    }

    r = s.api.neighborhood("duration", "max");
    REQUIRE(r.status == 200);
    CHECK(r.body["nodes"].size() == 5);
    CHECK(r.body["depth"] == "max");

    CHECK(s.api.neighborhood("Bond", "1").status == 404);
    CHECK(s.api.neighborhood("duration", "minus one").status == 400);
    CHECK(s.api.neighborhood("", "1").status == 400);
}

TEST_CASE("build with nothing approved warns") {
    Service s;
    const auto r = s.api.build("{}");
    REQUIRE(r.status == 200);
    CHECK(r.body["node_count"] == 0);
    REQUIRE(r.body["warnings"].size() >= 1);
    CHECK(s.api.health().body["graph_built"] == true);
}

TEST_CASE("review then build reflects the approval") {
    Service s;
    const auto listed = s.api.triples();
    REQUIRE(listed.status == 200);
    REQUIRE(listed.body["triples"].size() == 17);
    for (const auto& t : listed.body["triples"]) check_schema(t, "triple");

    json req = {{"triple_id", 0}, {"status", "approved"}, {"flags", {{"precision", true}}}};
    auto r = s.api.review(req.dump());
    REQUIRE(r.status == 200);
    check_schema(r.body, "triple");
    CHECK(r.body["flags"]["precision"] == true);
    CHECK(r.body["flags"]["relevance"].is_null());

    const auto built = s.api.build("{}");
    CHECK(built.body["node_count"] == 2);
    CHECK(built.body["edge_count"] == 1);

    req["status"] = "rejected";
    CHECK(s.api.review(req.dump()).status == 409);
    CHECK(s.api.review(json{{"triple_id", 999}, {"status", "approved"}}.dump()).status == 404);
    CHECK(s.api.review(json{{"triple_id", 1}, {"status", "maybe"}}.dump()).status == 400);
    CHECK(s.api.review(json{{"triple_id", -1}, {"status", "approved"}}.dump()).status == 400);

    CHECK(s.api.build(json{{"include_pending", true}}.dump()).body["node_count"] == 18);
}

TEST_CASE("health reports counts") {
    Service s;
    const auto r = s.api.health();
    check_schema(r.body, "health");
    CHECK(r.body["doc_count"] == 4);
    CHECK(r.body["chunk_count"] == 4);
    CHECK(r.body["triple_count"] == 17);
    CHECK(r.body["graph_built"] == false);
}

TEST_CASE("ingest endpoint") {
    Service s;
    auto r = s.api.ingest(json{{"doc_id", "extra"}, {"text", "A short extra note."}}.dump());
    REQUIRE(r.status == 200);
    CHECK(r.body["health"]["doc_count"] == 5);
    CHECK(s.api.ingest(json{{"path", "/definitely/not/here.txt"}}.dump()).status == 400);
    CHECK(s.api.ingest("{}").status == 400);
}

TEST_CASE("concurrent asks during rebuilds see whole snapshots") {
    Service s;
    const auto all = s.engine.triples();
    // first version: only the fixed-income triples
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].source_chunk_id == "fixed_income-00000") {
            s.engine.review(i, ReviewStatus::approved, {});
        }
    }
    const auto v1 = s.engine.build_graph();
    s.review_fixture();

    std::atomic<bool> done{false};
    std::atomic<int> failures{0};
    std::atomic<int> asked{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
        readers.emplace_back([&, t] {
            while (!done) {
                const auto snap = s.engine.snapshot();
                const std::size_t n = snap.graph->graph.nodes().size();
                if (n != 5 && n != 17) ++failures;
                const auto r = s.api.ask(ask_body("treasury bills " + std::to_string(t), "kgrag", false).dump());
                if (r.status != 200) ++failures;
                for (const auto& node : r.body["node_refs"]) {
                    if (!snap.graph->graph.find_node(node["node_id"].get<std::string>()) &&
                        n == 17) {
                        ++failures;
                    }
                }
                ++asked;
            }
        });
    }
    for (int i = 0; i < 5 || asked < 30; ++i) s.engine.build_graph(i % 2 == 1);
    done = true;
    for (auto& th : readers) th.join();
    CHECK(v1.node_count == 5);
    CHECK(failures == 0);
    CHECK(asked > 0);
    CHECK(s.engine.health().node_count == 17);
}

TEST_CASE("engine state survives a restart") {
    testing::ScratchDir dir("engine");
    json first_answer;
    {
        Engine engine(dir.str());
        engine.ingest_path(testing::fixture("finance/docs"));
        auto llm = CannedLlm::from_directory(testing::fixture("finance/canned"));
        const auto report = engine.extract(&llm);
        CHECK(report.runs.size() == 4);
        CHECK(report.triples_added == 17);
        CHECK(engine.approve_all_pending() == 17);
        engine.build_graph();
        first_answer = to_json(engine.ask({"s", "What is modified duration?", AnswerMode::kgrag, true}));
    }
    for (const char* f : {"settings.json", "triples.csv", "graph.json", "cache.jsonl", "cost_table.csv",
                          "ask_log.jsonl", "extraction_report.jsonl", "corpus/chunks.csv"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir.path() / f), std::string(f));
    }
    Engine engine(dir.str());
    const auto h = engine.health();
    CHECK(h.doc_count == 4);
    CHECK(h.node_count == 18);
    CHECK(h.approved_triples == 17);
    CHECK(h.cache_size == 1);
    const auto again = to_json(engine.ask({"s", "What is modified duration?", AnswerMode::kgrag, true}));
    CHECK(again["cache_hit"] == true);
    CHECK(again["answer_text"] == first_answer["answer_text"]);
}

TEST_CASE("HTTP server round trip") {
    Service s;
    s.review_fixture();
    s.engine.build_graph();
    testing::ScratchDir ui("ui");
    std::ofstream(ui.path() / "index.html") << "<html>console</html>";

    HttpServer server(s.engine, ui.str());
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    server.start();

    httplib::Client cli("127.0.0.1", port);
    auto health = cli.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    check_schema(json::parse(health->body), "health");

    auto ask = cli.Post("/api/ask", ask_body("What is a treasury bill?", "kgrag").dump(), "application/json");
    REQUIRE(ask);
    CHECK(ask->status == 200);
    check_schema(json::parse(ask->body), "ask_response");

    auto bad = cli.Post("/api/ask", ask_body("x", "banana").dump(), "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto nb = cli.Get("/api/graph/neighborhood?entity=treasury%20bills&depth=1");
    REQUIRE(nb);
    CHECK(nb->status == 200);
    check_schema(json::parse(nb->body), "neighborhood");
    CHECK(cli.Get("/api/graph/neighborhood?entity=nothing")->status == 404);

    auto page = cli.Get("/index.html");
    REQUIRE(page);
    CHECK(page->body == "<html>console</html>");
    CHECK(cli.Get("/api/triples")->status == 200);

    server.stop();
}

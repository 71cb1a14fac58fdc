#include "kgrag/api.hpp"

#include "kgrag/errors.hpp"

#include <httplib.h>

#include <filesystem>

namespace kgrag {

namespace {

ApiResponse bad_request(const std::string& msg) { return {400, {{"error", msg}}}; }

nlohmann::json parse_body(const std::string& body) {
    try {
        auto j = nlohmann::json::parse(body.empty() ? std::string("{}") : body);
        if (!j.is_object()) throw ContractViolation("request body must be a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ContractViolation(std::string("invalid JSON body: ") + e.what());
    }
}

template <typename T>
T field(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ContractViolation(std::string("field '") + key + "' has the wrong type");
    }
}

nlohmann::json triple_to_json(TripleId id, const Triple& t) {
    auto flag = [](const std::optional<bool>& f) { return f ? nlohmann::json(*f) : nlohmann::json(nullptr); };
    return {{"triple_id", id},
            {"subject", t.subject},
            {"predicate", t.predicate},
            {"object", t.object},
            {"source_chunk_id", t.source_chunk_id},
            {"status", to_string(t.status)},
            {"flags",
             {{"precision", flag(t.flags.precision)},
              {"completeness", flag(t.flags.completeness)},
              {"relevance", flag(t.flags.relevance)}}}};
}

template <typename F>
ApiResponse guarded(F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return error_response(e);
    }
}

}  // namespace

ApiResponse error_response(const std::exception& e) {
    int status = 500;
    if (dynamic_cast<const ContractViolation*>(&e) || dynamic_cast<const FormatError*>(&e) ||
        dynamic_cast<const EncodingError*>(&e) || dynamic_cast<const IngestError*>(&e)) {
        status = 400;
    } else if (dynamic_cast<const NotFoundError*>(&e)) {
        status = 404;
    } else if (dynamic_cast<const ConfigurationError*>(&e) || dynamic_cast<const InvalidTransition*>(&e)) {
        status = 409;
    } else if (dynamic_cast<const ProviderError*>(&e) || dynamic_cast<const PipelineError*>(&e)) {
        status = 502;
    }
    nlohmann::json body = {{"error", e.what()}};
    if (const auto* pe = dynamic_cast<const ProviderError*>(&e)) {
        body["provider_status"] = pe->status();
        body["attempts"] = pe->attempts();
    }
    return {status, std::move(body)};
}

nlohmann::json to_json(const AskResponse& r) {
    nlohmann::json j = to_json(r.answer);
    nlohmann::json out = {{"answer_text", j["answer_text"]},
                          {"mode", j["mode"]},
                          {"cache_hit", r.answer.cache_hit},
                          {"chunk_refs", j["chunk_refs"]},
                          {"node_refs", j["node_refs"]},
                          {"cost_estimate_usd", r.cost_estimate_usd},
                          {"timing_ms", r.timing_ms},
                          {"prompt_token_count", r.answer.prompt_token_count},
                          {"provider_name", r.answer.provider_name}};
    return out;
}

nlohmann::json to_json(const Health& h) {
    return {{"status", "ok"},
            {"doc_count", h.doc_count},
            {"chunk_count", h.chunk_count},
            {"node_count", h.node_count},
            {"edge_count", h.edge_count},
            {"cache_size", h.cache_size},
            {"triple_count", h.triple_count},
            {"approved_triples", h.approved_triples},
            {"graph_built", h.graph_built}};
}

ApiResponse Api::ask(const std::string& body) {
    return guarded([&]() -> ApiResponse {
        const auto j = parse_body(body);
        AskRequest req;
        req.session_id = field<std::string>(j, "session_id", "");
        req.query = field<std::string>(j, "query", "");
        req.use_cache = field<bool>(j, "use_cache", true);
        const std::string mode = field<std::string>(j, "mode", "kgrag");
        const auto parsed = parse_answer_mode(mode);
        if (!parsed) {
            ApiResponse r = bad_request("unknown mode '" + mode + "'");
            r.body["allowed_modes"] = kAnswerModes;
            return r;
        }
        req.mode = *parsed;
        return {200, to_json(engine_.ask(req))};
    });
}

ApiResponse Api::neighborhood(const std::string& entity, const std::string& depth) {
    return guarded([&]() -> ApiResponse {
        if (entity.empty()) return bad_request("missing 'entity' parameter");
        const auto d = TraversalDepth::parse(depth.empty() ? "1" : depth);
        const auto sub = engine_.neighborhood(entity, d);
        auto j = graph_to_json(sub);
        j["entity"] = canonical_entity_key(entity);
        j["depth"] = d.to_string();
        return {200, std::move(j)};
    });
}

ApiResponse Api::health() {
    return guarded([&]() -> ApiResponse { return {200, to_json(engine_.health())}; });
}

ApiResponse Api::ingest(const std::string& body) {
    return guarded([&]() -> ApiResponse {
        const auto j = parse_body(body);
        if (j.contains("path")) {
            const auto ids = engine_.ingest_path(field<std::string>(j, "path", ""));
            return {200, {{"doc_ids", ids}, {"health", to_json(engine_.health())}}};
        }
        const std::string doc_id = field<std::string>(j, "doc_id", "");
        if (doc_id.empty()) return bad_request("provide 'path' or 'doc_id' with 'text'");
        const auto n = engine_.ingest_text(doc_id, field<std::string>(j, "title", doc_id),
                                           field<std::string>(j, "text", ""));
        return {200, {{"doc_ids", {doc_id}}, {"chunk_count", n}, {"health", to_json(engine_.health())}}};
    });
}

ApiResponse Api::extract(const std::string& body) {
    return guarded([&]() -> ApiResponse {
        const auto j = parse_body(body);
        const std::string canned = field<std::string>(j, "canned_dir", "");
        ExtractReport report;
        if (!canned.empty()) {
            auto llm = CannedLlm::from_directory(canned);
            report = engine_.extract(&llm);
        } else {
            report = engine_.extract();
        }
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : report.runs) runs.push_back(run_to_json(r));
        return {200,
                {{"run_count", report.runs.size()},
                 {"failed_runs", report.failed_runs},
                 {"triples_added", report.triples_added},
                 {"runs", std::move(runs)}}};
    });
}

ApiResponse Api::build(const std::string& body) {
    return guarded([&]() -> ApiResponse {
        const auto j = parse_body(body);
        const auto report = engine_.build_graph(field<bool>(j, "include_pending", false));
        return {200,
                {{"node_count", report.node_count},
                 {"edge_count", report.edge_count},
                 {"triples_used", report.triples_used},
                 {"warnings", report.warnings}}};
    });
}

ApiResponse Api::review(const std::string& body) {
    return guarded([&]() -> ApiResponse {
        const auto j = parse_body(body);
        if (!j.contains("triple_id") || !j["triple_id"].is_number_unsigned()) {
            return bad_request("'triple_id' must be a non-negative integer");
        }
        const TripleId id = j["triple_id"].get<TripleId>();
        const ReviewStatus status = parse_review_status(field<std::string>(j, "status", ""));
        ReviewFlags flags;
        if (j.contains("flags")) {
            const auto& f = j["flags"];
            auto get = [&](const char* k) -> std::optional<bool> {
                if (!f.contains(k) || f[k].is_null()) return std::nullopt;
                if (!f[k].is_boolean()) throw ContractViolation(std::string("flag '") + k + "' must be boolean");
                return f[k].get<bool>();
            };
            flags.precision = get("precision");
            flags.completeness = get("completeness");
            flags.relevance = get("relevance");
        }
        const Triple t = engine_.review(id, status, flags);
        return {200, triple_to_json(id, t)};
    });
}

ApiResponse Api::triples() {
    return guarded([&]() -> ApiResponse {
        nlohmann::json arr = nlohmann::json::array();
        const auto all = engine_.triples();
        for (std::size_t i = 0; i < all.size(); ++i) arr.push_back(triple_to_json(i, all[i]));
        return {200, {{"triples", std::move(arr)}}};
    });
}

ApiResponse Api::flush_cache() {
    return guarded([&]() -> ApiResponse {
        engine_.flush_cache();
        return {200, {{"cache_size", 0}}};
    });
}

// ---- HTTP -------------------------------------------------------------------

struct HttpServer::Impl {
    Engine& engine;
    Api api;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Engine& e) : engine(e), api(e) {}
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json; charset=utf-8");
}

}  // namespace

HttpServer::HttpServer(Engine& engine, std::string ui_dir) : impl_(std::make_unique<Impl>(engine)) {
    auto& s = impl_->server;
    Api& api = impl_->api;
    s.Post("/api/ask", [&api](const httplib::Request& req, httplib::Response& res) {
        reply(res, api.ask(req.body));
    });
    s.Get("/api/graph/neighborhood", [&api](const httplib::Request& req, httplib::Response& res) {
        reply(res, api.neighborhood(req.get_param_value("entity"), req.get_param_value("depth")));
    });
    s.Get("/api/health", [&api](const httplib::Request&, httplib::Response& res) { reply(res, api.health()); });
    s.Post("/api/ingest", [&api](const httplib::Request& req, httplib::Response& res) {
        reply(res, api.ingest(req.body));
    });
    s.Post("/api/extract", [&api](const httplib::Request& req, httplib::Response& res) {
        reply(res, api.extract(req.body));
    });
    s.Post("/api/graph/build", [&api](const httplib::Request& req, httplib::Response& res) {
        reply(res, api.build(req.body));
    });
    s.Post("/api/triples/review", [&api](const httplib::Request& req, httplib::Response& res) {
        reply(res, api.review(req.body));
    });
    s.Get("/api/triples", [&api](const httplib::Request&, httplib::Response& res) { reply(res, api.triples()); });
    s.Post("/api/cache/flush", [&api](const httplib::Request&, httplib::Response& res) {
        reply(res, api.flush_cache());
    });

    std::error_code ec;
    if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir, ec)) {
        s.set_mount_point("/", ui_dir);
    } else {
        s.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("kgrag service is running; the chat UI is not installed (see --ui-dir).\n",
                            "text/plain; charset=utf-8");
        });
    }
    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            reply(res, error_response(e));
        } catch (...) {
            reply(res, {500, {{"error", "unknown error"}}});
        }
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    auto& s = impl_->server;
    const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw ConfigurationError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace kgrag

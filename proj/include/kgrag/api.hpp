#pragma once

#include "kgrag/engine.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <thread>

namespace kgrag {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Transport-independent request handlers. Bodies are UTF-8 JSON; errors come
// back as {"error": "..."} with a 4xx/5xx status.
class Api {
public:
    explicit Api(Engine& engine) : engine_(engine) {}

    ApiResponse ask(const std::string& body);
    ApiResponse neighborhood(const std::string& entity, const std::string& depth);
    ApiResponse health();
    ApiResponse ingest(const std::string& body);
    ApiResponse extract(const std::string& body);
    ApiResponse build(const std::string& body);
    ApiResponse review(const std::string& body);
    ApiResponse triples();
    ApiResponse flush_cache();

private:
    Engine& engine_;
};

nlohmann::json to_json(const AskResponse& r);
nlohmann::json to_json(const Health& h);

// Maps engine exceptions onto HTTP statuses.
ApiResponse error_response(const std::exception& e);

// cpp-httplib server exposing Api under /api and, when ui_dir exists, static
// files at /.
class HttpServer {
public:
    HttpServer(Engine& engine, std::string ui_dir = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    void listen();        // blocks until stop()
    void start();         // listen() on a background thread
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kgrag

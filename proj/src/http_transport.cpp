#include <httplib.h>

#include "kgrag/http_transport.hpp"

#include "kgrag/errors.hpp"

namespace kgrag {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigurationError("endpoint is not a URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(int timeout) : timeout_(timeout) {}

    HttpResponse post_json(const std::string& url,
                           const std::map<std::string, std::string>& headers,
                           const std::string& body) override {
        const auto parts = split_url(url);
        httplib::Client client(parts.origin);
        client.set_connection_timeout(timeout_, 0);
        client.set_read_timeout(timeout_, 0);
        client.set_write_timeout(timeout_, 0);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(parts.path, h, body, "application/json");
        if (!res) {
            throw ProviderError("request to " + url + " failed: " + httplib::to_string(res.error()), 0);
        }
        return {res->status, res->body};
    }

private:
    int timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(int timeout_seconds) {
    return std::make_shared<HttplibTransport>(timeout_seconds);
}

}  // namespace kgrag

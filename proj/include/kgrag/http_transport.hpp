#pragma once

#include <map>
#include <memory>
#include <string>

namespace kgrag {

struct HttpResponse {
    int status = 0;
    std::string body;
};

// POSTs a JSON body. Implementations throw ProviderError(status 0) when no
// response was received at all.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& url,
                                   const std::map<std::string, std::string>& headers,
                                   const std::string& body) = 0;
};

// cpp-httplib backed transport; handles http:// and https:// URLs.
std::shared_ptr<HttpTransport> make_http_transport(int timeout_seconds = 60);

}  // namespace kgrag

#include <httplib.h>

#include "forge/backend.hpp"
#include "forge/error.hpp"

namespace forge {

namespace {

class HttplibTransport : public Transport {
public:
    explicit HttplibTransport(double timeout_seconds) : timeout_(timeout_seconds) {}

    HttpResponse post(const HttpRequest& request) override {
        const auto scheme_end = request.url.find("://");
        if (scheme_end == std::string::npos) return {0, {}, "endpoint is not an absolute URL: " + request.url};
        const auto path_start = request.url.find('/', scheme_end + 3);
        const std::string origin = request.url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

        httplib::Client client(origin);
        const auto secs = static_cast<time_t>(timeout_);
        client.set_connection_timeout(secs, 0);
        client.set_read_timeout(secs, 0);
        client.set_write_timeout(secs, 0);

        httplib::Headers headers;
        std::string content_type = "application/json";
        for (const auto& [k, v] : request.headers) {
            if (k == "Content-Type") content_type = v;
            else headers.emplace(k, v);
        }
        auto result = client.Post(path, headers, request.body, content_type);
        if (!result) return {0, {}, httplib::to_string(result.error())};
        return {result->status, result->body, {}};
    }

private:
    double timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(double timeout_seconds) {
    return std::make_shared<HttplibTransport>(timeout_seconds);
}

}  // namespace forge

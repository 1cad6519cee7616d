#include "bucketnet/http_server.hpp"

#include <httplib.h>

namespace bucketnet {

namespace {

std::optional<std::string> session_from_cookie(const std::string& cookie_header) {
    const std::string key = std::string(kSessionCookie) + "=";
    std::size_t pos = 0;
    while (pos < cookie_header.size()) {
        while (pos < cookie_header.size() && (cookie_header[pos] == ' ' || cookie_header[pos] == ';')) ++pos;
        const std::size_t end = cookie_header.find(';', pos);
        const std::string item = cookie_header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        if (item.rfind(key, 0) == 0) return item.substr(key.size());
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    return std::nullopt;
}

}  // namespace

struct HttpServer::Impl {
    explicit Impl(BucketService& s) : service(s) {}

    void translate(const httplib::Request& req, httplib::Response& res) {
        HttpRequest request;
        request.method = req.method;
        request.target = req.target;
        request.body = req.body;
        request.content_type = req.get_header_value("Content-Type");
        request.cookie_session = session_from_cookie(req.get_header_value("Cookie"));
        request.accepts_json = req.get_header_value("Accept").find("application/json") != std::string::npos;

        HttpResponse response = service.handle(request);
        res.status = response.status;
        for (const auto& [k, v] : response.headers) res.set_header(k, v);
        res.set_content(response.body, response.content_type);
    }

    BucketService& service;
    httplib::Server server;
};

HttpServer::HttpServer(BucketService& service) : impl_(std::make_unique<Impl>(service)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->translate(req, res); };
    // The library default sets SO_REUSEPORT, which would let a second server
    // silently share an occupied port.
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        return port_ > 0;
    }
    if (!impl_->server.bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace bucketnet

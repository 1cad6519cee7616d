#pragma once

#include <memory>
#include <string>

#include "bucketnet/service.hpp"

namespace bucketnet {

/// cpp-httplib front end for a BucketService.
class HttpServer {
public:
    explicit HttpServer(BucketService& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to host:port; port 0 picks an ephemeral port. Returns false on failure.
    bool bind(const std::string& host, int port);
    int port() const { return port_; }

    /// Serves until stop() is called. Blocks.
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = -1;
};

}  // namespace bucketnet

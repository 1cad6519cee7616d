#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bucketnet/error.hpp"
#include "bucketnet/network_driver.hpp"
#include "bucketnet/protocol.hpp"

namespace bucketnet {

/// Transport-independent request. `target` is the raw request target
/// (path plus query string, still percent-encoded).
struct HttpRequest {
    std::string method = "GET";
    std::string target;
    std::string body;
    std::string content_type;
    std::optional<std::string> cookie_session;
    bool accepts_json = false;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "text/plain";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;

    const std::string* header(std::string_view name) const;
};

struct DisplayLink {
    std::string display_name;
    BucketId target;
    std::string url;
    double weight = 0.0;
};

/// What a display request renders.
struct DisplayPayload {
    BucketId bucket;
    std::string title;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<Element> content;
    std::vector<DisplayLink> links;  // weight descending, exactly ranked_links
    std::string session;
};

nlohmann::json to_json(const DisplayPayload& payload);
std::string render_html(const DisplayPayload& payload);

/// Name of the cookie carrying the session token.
inline constexpr const char* kSessionCookie = "bucket_session";

struct ServiceOptions {
    BucketId portal;
};

/// Maps bucket method invocations onto the driver:
///   GET  /{id}?method=display[&referer=ID][&redirect=URL][&session=T][&format=json]
///   POST /{id}?method=addElement            (JSON or XML element body)
///   GET  /_analytics/centrality?metric=degree|weighted&k=N
///   GET  /_analytics/hierarchy?root=ID&depth=D&branch=B[&min_weight=W]
///
/// A display carrying a redirect is a traversal: the hop from the referer
/// (or the session's previous bucket) to the innermost redirect target is
/// reinforced and the client is redirected to the target's plain display.
class BucketService {
public:
    BucketService(NetworkDriver& driver, ServiceOptions options);

    HttpResponse handle(const HttpRequest& request);

    DisplayPayload display_payload(const BucketId& bucket, const std::string& session,
                                   ResponseFormat format) const;

private:
    HttpResponse handle_display(const MethodRequest& request, const std::string& session,
                                ResponseFormat format);
    HttpResponse handle_add_element(const MethodRequest& request, const HttpRequest& raw);
    HttpResponse handle_analytics(std::string_view path, std::string_view query);

    NetworkDriver& driver_;
    ServiceOptions options_;
};

/// Parses an addElement body: a JSON object
/// {"id", "kind", "href"?, "weight"?, "displayName"?} or an XML `<element>`.
Element parse_element_body(std::string_view body, std::string_view content_type);

/// HTTP status for a library error.
int status_for(ErrorCode code);

}  // namespace bucketnet

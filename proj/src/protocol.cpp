#include "bucketnet/protocol.hpp"

#include <vector>

#include "bucketnet/error.hpp"

namespace bucketnet {

std::string_view to_string(BucketMethod method) {
    switch (method) {
        case BucketMethod::Display: return "display";
        case BucketMethod::AddElement: return "addElement";
    }
    return "display";
}

const MethodRequest& MethodRequest::innermost() const {
    const MethodRequest* cursor = this;
    while (cursor->redirect) cursor = cursor->redirect.get();
    return *cursor;
}

std::size_t MethodRequest::redirect_depth() const {
    std::size_t depth = 0;
    for (const MethodRequest* c = this; c->redirect; c = c->redirect.get()) ++depth;
    return depth;
}

std::string url_encode(std::string_view text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
            c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += kHex[c >> 4];
            out += kHex[c & 0xF];
        }
    }
    return out;
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

struct SplitUrl {
    std::string_view path;
    std::string_view query;
};

SplitUrl split_url(std::string_view raw) {
    SplitUrl parts;
    const auto q = raw.find('?');
    std::string_view head = raw.substr(0, q);
    if (q != std::string_view::npos) parts.query = raw.substr(q + 1);

    if (const auto scheme = head.find("://"); scheme != std::string_view::npos) {
        std::string_view rest = head.substr(scheme + 3);
        const auto slash = rest.find('/');
        std::string_view authority = rest.substr(0, slash);
        std::string_view path = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
        // http://b2?method=display: the authority itself is the bucket
        if (path.empty() || path == "/") path = authority;
        head = path;
    }
    while (!head.empty() && head.front() == '/') head.remove_prefix(1);
    while (!head.empty() && head.back() == '/') head.remove_suffix(1);
    parts.path = head;
    return parts;
}

MethodRequest parse_at_level(std::string_view raw, std::size_t level) {
    const SplitUrl parts = split_url(raw);
    if (parts.path.find('/') != std::string_view::npos) {
        throw Error(ErrorCode::InvalidBucketId, "bucket path must be one segment: '" +
                                                    std::string(parts.path) + "'");
    }
    MethodRequest request;
    request.bucket = BucketId(std::string(parts.path));

    std::string_view query = parts.query;
    while (!query.empty()) {
        const auto amp = query.find('&');
        std::string_view pair = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        if (pair.empty()) continue;

        const auto eq = pair.find('=');
        const std::string_view key = pair.substr(0, eq);
        const std::string_view encoded = eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1);
        const auto value = url_decode(encoded);
        if (!value) {
            throw Error(ErrorCode::MalformedRedirect, "bad percent-escape in '" + std::string(key) + "'");
        }

        if (key == "method") {
            if (*value == "display") {
                request.method = BucketMethod::Display;
            } else if (*value == "addElement") {
                request.method = BucketMethod::AddElement;
            } else {
                throw Error(ErrorCode::UnknownMethod, *value);
            }
        } else if (key == "referer") {
            if (!BucketId::is_valid(*value)) {
                throw Error(ErrorCode::MalformedRedirect, "referer is not a bucket id: '" + *value + "'");
            }
            request.referer = BucketId(*value);
        } else if (key == "redirect") {
            if (level + 1 > MethodRequest::kMaxRedirectDepth) {
                throw Error(ErrorCode::MalformedRedirect, "redirect nesting exceeds " +
                                                              std::to_string(MethodRequest::kMaxRedirectDepth));
            }
            try {
                request.redirect = std::make_shared<const MethodRequest>(parse_at_level(*value, level + 1));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::MalformedRedirect) throw;
                throw Error(ErrorCode::MalformedRedirect, e.what());
            }
        } else if (key == "session") {
            request.session = *value;
        } else if (key == "format" || key == "accept") {
            request.format = (*value == "json" || *value == "application/json") ? ResponseFormat::Json
                                                                                : ResponseFormat::Html;
        }
    }
    return request;
}

}  // namespace

std::optional<std::string> url_decode(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '%') {
            out += text[i];
            continue;
        }
        if (i + 2 >= text.size()) return std::nullopt;
        const int hi = hex_value(text[i + 1]);
        const int lo = hex_value(text[i + 2]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
    }
    return out;
}

MethodRequest parse_method_request(std::string_view raw) { return parse_at_level(raw, 0); }

std::string display_url(const BucketId& bucket, const std::optional<std::string>& session,
                        ResponseFormat format) {
    std::string url = "/" + bucket.str() + "?method=display";
    if (session) url += "&session=" + url_encode(*session);
    if (format == ResponseFormat::Json) url += "&format=json";
    return url;
}

std::string traversal_url(const BucketId& current, const BucketId& target,
                          const std::optional<std::string>& session, ResponseFormat format) {
    std::string url = "/" + current.str() + "?method=display&referer=" + current.str() +
                      "&redirect=" + url_encode("/" + target.str() + "?method=display");
    if (session) url += "&session=" + url_encode(*session);
    if (format == ResponseFormat::Json) url += "&format=json";
    return url;
}

std::optional<BucketId> bucket_from_href(std::string_view href) {
    if (href.empty() || href.front() != '/') return std::nullopt;
    std::string_view path = href.substr(1);
    path = path.substr(0, path.find('?'));
    if (!path.empty() && path.back() == '/') path.remove_suffix(1);
    if (!BucketId::is_valid(path)) return std::nullopt;
    return BucketId(std::string(path));
}

std::map<std::string, std::string> parse_query(std::string_view query) {
    std::map<std::string, std::string> params;
    while (!query.empty()) {
        const auto amp = query.find('&');
        std::string_view pair = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        if (pair.empty()) continue;
        const auto eq = pair.find('=');
        auto key = url_decode(pair.substr(0, eq));
        auto value = url_decode(eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1));
        if (!key || !value) throw Error(ErrorCode::MalformedRedirect, "bad percent-escape");
        params[*key] = *value;
    }
    return params;
}

std::string bucket_href(const BucketId& bucket) { return "/" + bucket.str(); }

}  // namespace bucketnet

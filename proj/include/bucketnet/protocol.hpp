#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "bucketnet/bucket_id.hpp"

namespace bucketnet {

enum class BucketMethod { Display, AddElement };
enum class ResponseFormat { Html, Json };

std::string_view to_string(BucketMethod method);

/// Parsed form of `/{bucket}?method=...&referer=...&redirect=...`.
struct MethodRequest {
    static constexpr std::size_t kMaxRedirectDepth = 3;

    BucketId bucket;
    BucketMethod method = BucketMethod::Display;
    std::optional<BucketId> referer;
    /// Nested request named by the redirect argument, if any.
    std::shared_ptr<const MethodRequest> redirect;
    std::optional<std::string> session;
    ResponseFormat format = ResponseFormat::Html;

    /// End of the redirect chain (this request when there is no redirect).
    const MethodRequest& innermost() const;
    std::size_t redirect_depth() const;
};

/// Parses a request URL. Accepted shapes:
///   /b1                      display is the default method
///   /b1?method=display&referer=b1&redirect=%2Fb2%3Fmethod%3Ddisplay
///   http://host/b1?...       scheme and authority are ignored
///   http://b1?...            a bare authority names the bucket
/// Redirect values are decoded and parsed recursively, at most
/// kMaxRedirectDepth levels deep. Throws MalformedRedirect, UnknownMethod or
/// InvalidBucketId.
MethodRequest parse_method_request(std::string_view raw);

/// Percent-encodes everything outside [A-Za-z0-9-_.~].
std::string url_encode(std::string_view text);
/// Decodes %XX escapes; nullopt on a malformed escape.
std::optional<std::string> url_decode(std::string_view text);

/// `/{bucket}?method=display[&session=T][&format=json]`
std::string display_url(const BucketId& bucket, const std::optional<std::string>& session = {},
                        ResponseFormat format = ResponseFormat::Html);

/// Link URL rendered inside `current`'s display: routes the click back
/// through `current` with itself as referer and the target's display as the
/// redirect.
std::string traversal_url(const BucketId& current, const BucketId& target,
                          const std::optional<std::string>& session = {},
                          ResponseFormat format = ResponseFormat::Html);

/// Bucket named by a local href ("/b2" or "/b2?method=display"); nullopt for
/// anything that is not a local bucket reference.
std::optional<BucketId> bucket_from_href(std::string_view href);

/// Decoded key/value pairs of a query string; later duplicates win.
/// Throws MalformedRedirect on a bad escape.
std::map<std::string, std::string> parse_query(std::string_view query);

/// Canonical href stored for a bucket link.
std::string bucket_href(const BucketId& bucket);

}  // namespace bucketnet

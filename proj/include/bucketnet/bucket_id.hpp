#pragma once

#include <compare>
#include <functional>
#include <string>
#include <string_view>

namespace bucketnet {

/// Identifier of a bucket. Restricted to [A-Za-z0-9_-] so it can be used
/// verbatim as a URL path segment and as a file name.
class BucketId {
public:
    BucketId() = default;
    explicit BucketId(std::string value);

    static bool is_valid(std::string_view value) noexcept;

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend auto operator<=>(const BucketId&, const BucketId&) = default;
    friend bool operator==(const BucketId&, const BucketId&) = default;

private:
    std::string value_;
};

}  // namespace bucketnet

template <>
struct std::hash<bucketnet::BucketId> {
    std::size_t operator()(const bucketnet::BucketId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};

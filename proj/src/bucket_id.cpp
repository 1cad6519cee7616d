#include "bucketnet/bucket_id.hpp"

#include <algorithm>

#include "bucketnet/error.hpp"

namespace bucketnet {

BucketId::BucketId(std::string value) : value_(std::move(value)) {
    if (!is_valid(value_)) {
        throw Error(ErrorCode::InvalidBucketId, "'" + value_ + "'");
    }
}

bool BucketId::is_valid(std::string_view value) noexcept {
    if (value.empty()) return false;
    return std::all_of(value.begin(), value.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '-' || c == '_';
    });
}

}  // namespace bucketnet

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bucketnet {

enum class ErrorCode {
    InvalidBucketId,
    SelfLink,
    UnknownBucket,
    NonPositiveDelta,
    DuplicateLink,
    SessionMismatch,
    SelfHop,
    InvalidConfig,
    EmptyTree,
    TargetNotInTree,
    InsufficientData,
    ConstantSeries,
    NotFound,
    MalformedXml,
    SchemaViolation,
    IoFailure,
    DuplicateElement,
    MalformedRedirect,
    UnknownMethod,
    InvalidParameters,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (service, CLI) can map it onto a status without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bucketnet

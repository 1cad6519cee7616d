#include "bucketnet/error.hpp"

namespace bucketnet {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidBucketId: return "InvalidBucketId";
        case ErrorCode::SelfLink: return "SelfLink";
        case ErrorCode::UnknownBucket: return "UnknownBucket";
        case ErrorCode::NonPositiveDelta: return "NonPositiveDelta";
        case ErrorCode::DuplicateLink: return "DuplicateLink";
        case ErrorCode::SessionMismatch: return "SessionMismatch";
        case ErrorCode::SelfHop: return "SelfHop";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::EmptyTree: return "EmptyTree";
        case ErrorCode::TargetNotInTree: return "TargetNotInTree";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::ConstantSeries: return "ConstantSeries";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::MalformedXml: return "MalformedXml";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::DuplicateElement: return "DuplicateElement";
        case ErrorCode::MalformedRedirect: return "MalformedRedirect";
        case ErrorCode::UnknownMethod: return "UnknownMethod";
        case ErrorCode::InvalidParameters: return "InvalidParameters";
    }
    return "Unknown";
}

}  // namespace bucketnet

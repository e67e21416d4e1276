#include "physnote/errors.hpp"

namespace physnote {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::NoAssets: return "NoAssets";
    case ErrorCode::UnreadableAsset: return "UnreadableAsset";
    case ErrorCode::MalformedId: return "MalformedId";
    case ErrorCode::MalformedObservation: return "MalformedObservation";
    case ErrorCode::UnresolvedId: return "UnresolvedId";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedDiscovery: return "MalformedDiscovery";
    case ErrorCode::MissingCandidateAnswer: return "MissingCandidateAnswer";
    case ErrorCode::NoQueries: return "NoQueries";
    case ErrorCode::MalformedVerdict: return "MalformedVerdict";
    case ErrorCode::MissingFinalAnswer: return "MissingFinalAnswer";
    case ErrorCode::NoTipsExtracted: return "NoTipsExtracted";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::CassetteMiss: return "CassetteMiss";
    case ErrorCode::FixtureExhausted: return "FixtureExhausted";
    case ErrorCode::MissingAsset: return "MissingAsset";
    case ErrorCode::NoAnswerFound: return "NoAnswerFound";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

} // namespace physnote

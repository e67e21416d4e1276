#pragma once

#include <stdexcept>
#include <string>

namespace physnote {

// Every failure the engine can signal, across all modules. Errors carry a
// code so callers (and the C API) can branch without string matching.
enum class ErrorCode {
    // canonicalization
    EmptyQuestion,
    NoAssets,
    UnreadableAsset,
    MalformedId,
    MalformedObservation,
    UnresolvedId,
    EmptyField,
    // knowledge notes
    UnknownNode,
    DuplicateNode,
    IoFailure,
    SchemaViolation,
    // selection / embeddings
    ProviderUnavailable,
    DimensionMismatch,
    MalformedDiscovery,
    // agent loop
    MissingCandidateAnswer,
    NoQueries,
    MalformedVerdict,
    MissingFinalAnswer,
    // reflection
    NoTipsExtracted,
    // backends
    Transport,
    RateLimited,
    MalformedResponse,
    Timeout,
    CassetteMiss,
    FixtureExhausted,
    // harness
    MissingAsset,
    NoAnswerFound,
    ConfigError,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace physnote

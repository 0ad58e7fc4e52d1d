#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srckt {

enum class ErrorCode {
    MalformedPrefix,
    UnknownToken,
    MissingConstants,
    UnsatisfiableDomain,
    NoConstants,
    ConfigError,
    ShapeMismatch,
    MissingPatch,
    SeqTooLong,
    BadMagic,
    VersionMismatch,
    ChecksumFail,
    DivergenceDetected,
    InsufficientPool,
    NoValidCounterfactual,
    NoRelatedToken,
    EmptyDataset,
    BaselineTooHigh,
    DegenerateVariance,
    MissingComponent,
    InsufficientFailures,
    ConfigMismatch,
    IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; callers dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

} // namespace srckt

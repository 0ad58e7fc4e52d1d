#include "srckt/util/error.hpp"

namespace srckt {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedPrefix: return "MalformedPrefix";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::MissingConstants: return "MissingConstants";
    case ErrorCode::UnsatisfiableDomain: return "UnsatisfiableDomain";
    case ErrorCode::NoConstants: return "NoConstants";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingPatch: return "MissingPatch";
    case ErrorCode::SeqTooLong: return "SeqTooLong";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumFail: return "ChecksumFail";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::NoValidCounterfactual: return "NoValidCounterfactual";
    case ErrorCode::NoRelatedToken: return "NoRelatedToken";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::BaselineTooHigh: return "BaselineTooHigh";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::MissingComponent: return "MissingComponent";
    case ErrorCode::InsufficientFailures: return "InsufficientFailures";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace srckt

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hta {

enum class ErrorKind {
    // Input validation
    InvalidContour,
    DegenerateShape,
    NonFinite,
    SchemaError,
    RangeError,
    DuplicateKey,
    UnknownEntity,
    MissingViews,
    VersionMismatch,
    CorruptModel,
    InvalidSpec,
    InvalidArgument,
    // Runtime
    InsufficientVariance,
    EmptyRow,
    UnknownRow,
    EmptyTestSet,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidContour: return "InvalidContour";
    case ErrorKind::DegenerateShape: return "DegenerateShape";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::UnknownEntity: return "UnknownEntity";
    case ErrorKind::MissingViews: return "MissingViews";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptModel: return "CorruptModel";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InsufficientVariance: return "InsufficientVariance";
    case ErrorKind::EmptyRow: return "EmptyRow";
    case ErrorKind::UnknownRow: return "UnknownRow";
    case ErrorKind::EmptyTestSet: return "EmptyTestSet";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// True for errors caused by malformed or out-of-contract input.
constexpr bool is_validation(ErrorKind kind) {
    return kind < ErrorKind::InsufficientVariance;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace hta

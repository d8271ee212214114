#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace linesim {

enum class ErrorKind {
    PastTick,
    ConfigInvalid,
    IoError,
    TargetNotFound,
    UnknownParameter,
    OutOfBounds,
    BindFailed,
    InvalidQuantity,
    PayloadTooLarge,
    UnknownLink,
    OutOfStock,
    InvalidParameter,
    Unavailable,
    EmptyTraining,
    TimelineMismatch,
    SchemaMismatch,
    SchemaUnsupported,
    CorruptRecord,
    NoGroundTruth,
    WriteRejected,
    Timeout,
    ExceptionResponse,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the whole library. `detail()` carries the
// machine-usable part (field path, parameter name, line number, ...).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string detail)
        : std::runtime_error(std::string(to_string(kind)) + "(" + detail + ")"),
          kind_(kind),
          detail_(std::move(detail)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

}  // namespace linesim

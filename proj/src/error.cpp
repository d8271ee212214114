#include "linesim/error.hpp"
#include "linesim/hash.hpp"

#include <cstdio>

namespace linesim {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::PastTick: return "PastTick";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::TargetNotFound: return "TargetNotFound";
        case ErrorKind::UnknownParameter: return "UnknownParameter";
        case ErrorKind::OutOfBounds: return "OutOfBounds";
        case ErrorKind::BindFailed: return "BindFailed";
        case ErrorKind::InvalidQuantity: return "InvalidQuantity";
        case ErrorKind::PayloadTooLarge: return "PayloadTooLarge";
        case ErrorKind::UnknownLink: return "UnknownLink";
        case ErrorKind::OutOfStock: return "OutOfStock";
        case ErrorKind::InvalidParameter: return "InvalidParameter";
        case ErrorKind::Unavailable: return "Unavailable";
        case ErrorKind::EmptyTraining: return "EmptyTraining";
        case ErrorKind::TimelineMismatch: return "TimelineMismatch";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::SchemaUnsupported: return "SchemaUnsupported";
        case ErrorKind::CorruptRecord: return "CorruptRecord";
        case ErrorKind::NoGroundTruth: return "NoGroundTruth";
        case ErrorKind::WriteRejected: return "WriteRejected";
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::ExceptionResponse: return "ExceptionResponse";
    }
    return "Unknown";
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace linesim

#include "canopose/error.hpp"

namespace canopose {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::EmptyCloud: return "EmptyCloud";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
        case ErrorKind::CapacityExceeded: return "CapacityExceeded";
        case ErrorKind::InvalidDepth: return "InvalidDepth";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::NoForeground: return "NoForeground";
        case ErrorKind::EmptyShape: return "EmptyShape";
        case ErrorKind::OverlapRejected: return "OverlapRejected";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace canopose

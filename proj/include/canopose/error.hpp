#pragma once

#include <stdexcept>
#include <string>

namespace canopose {

enum class ErrorKind {
    EmptyCloud,
    ShapeMismatch,
    LevelOutOfRange,
    CapacityExceeded,
    InvalidDepth,
    DimMismatch,
    NoForeground,
    EmptyShape,
    OverlapRejected,
    InvalidArgument,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Library error. Validation kinds (bad input) are distinguished from
/// runtime kinds so the CLI can map them onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    bool is_validation() const noexcept {
        return kind_ == ErrorKind::InvalidArgument || kind_ == ErrorKind::LevelOutOfRange ||
               kind_ == ErrorKind::ShapeMismatch || kind_ == ErrorKind::DimMismatch;
    }

private:
    ErrorKind kind_;
};

}  // namespace canopose

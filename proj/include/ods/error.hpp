#pragma once

#include <stdexcept>
#include <string>

namespace ods {

enum class ErrorCode {
    ZeroVector,
    BadAspect,
    BadScale,
    ZeroDisparity,
    NonPositiveDepth,
    DimensionMismatch,
    EmptyObject,
    BadFov,
    IndexOutOfRange,
    FovTooNarrow,
    EmptyInput,
    OutOfSource,
    EmptyMask,
    NoConvergence,
    BadParams,
    CountMismatch,
    ParseError,
    ValidationError,
    IoError,
    InvalidPlacement,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this exception type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    // Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace ods

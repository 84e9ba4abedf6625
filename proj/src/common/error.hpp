#pragma once

#include <stdexcept>
#include <string>

namespace pmdflow {

enum class ErrorCode {
    Validation = 1,
    Config,
    PoissonNotConverged,
    CflViolation,
    NonFinite,
    StreamEnded,
    EigenConvergence,
    DegenerateMode,
    MissingCase,
    NoConfigs,
    Io,
    Internal,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the toolkit. The code survives
/// the trip through the C API and decides the CLI exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace pmdflow

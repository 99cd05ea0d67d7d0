#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kinverify {

/// Failure categories. The CLI prints the category name as the first token
/// of its single-line error message and maps it to the exit code.
enum class ErrorCode {
    io,                // file missing, unreadable, unwritable
    decode,            // image or binary file could not be decoded
    invalid_argument,  // precondition violated by the caller
    degenerate_input,  // zero variance, zero vector, single-class labels
    rank_deficient,    // requested dimension exceeds the numerical rank
    not_converged,     // iterative solver hit its iteration cap
    missing_artifact,  // a required learned artifact is absent
};

std::string_view to_string(ErrorCode code) noexcept;
int exit_code(ErrorCode code) noexcept;

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

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace kinverify

#include "kinverify/error.hpp"

namespace kinverify {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::io: return "io";
        case ErrorCode::decode: return "decode";
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::degenerate_input: return "degenerate-input";
        case ErrorCode::rank_deficient: return "rank-deficient";
        case ErrorCode::not_converged: return "not-converged";
        case ErrorCode::missing_artifact: return "missing-artifact";
    }
    return "unknown";
}

int exit_code(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::io: return 3;
        case ErrorCode::decode: return 4;
        case ErrorCode::invalid_argument: return 5;
        case ErrorCode::degenerate_input: return 6;
        case ErrorCode::rank_deficient: return 7;
        case ErrorCode::not_converged: return 8;
        case ErrorCode::missing_artifact: return 9;
    }
    return 1;
}

}  // namespace kinverify

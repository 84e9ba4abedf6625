#include "common/error.hpp"

namespace pmdflow {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Validation: return "validation error";
        case ErrorCode::Config: return "config error";
        case ErrorCode::PoissonNotConverged: return "pressure Poisson solve not converged";
        case ErrorCode::CflViolation: return "CFL violation";
        case ErrorCode::NonFinite: return "non-finite flow state";
        case ErrorCode::StreamEnded: return "simulation ended before snapshot plan was satisfied";
        case ErrorCode::EigenConvergence: return "eigensolver did not converge";
        case ErrorCode::DegenerateMode: return "degenerate POD mode requested";
        case ErrorCode::MissingCase: return "missing case";
        case ErrorCode::NoConfigs: return "no configs found";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::Internal: return "internal error";
    }
    return "unknown error";
}

}  // namespace pmdflow

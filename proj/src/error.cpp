#include "tauh2/error.hpp"

namespace tauh2 {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::OrderingViolation: return "ordering-violation";
        case ErrorKind::IndexError: return "index-error";
        case ErrorKind::ReductionFailure: return "reduction-failure";
        case ErrorKind::LyapunovSingular: return "lyapunov-singular";
        case ErrorKind::FeedthroughPresent: return "feedthrough-present";
        case ErrorKind::Unstable: return "unstable-without-flip";
        case ErrorKind::DefectiveEigenproblem: return "defective-eigenproblem";
        case ErrorKind::PoleAtPoint: return "pole-at-s";
        case ErrorKind::CharacteristicRoot: return "characteristic-root-at-s";
        case ErrorKind::OracleDivergence: return "oracle-divergence";
        case ErrorKind::NoGradient: return "no-gradient";
        case ErrorKind::UnsupportedMode: return "unsupported-mode";
    }
    return "unknown";
}

}  // namespace tauh2

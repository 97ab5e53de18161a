#pragma once

#include <stdexcept>
#include <string>

namespace tauh2 {

/// Failure categories. The CLI maps these onto its exit-code contract.
enum class ErrorKind {
    InvalidInput,
    OrderingViolation,
    IndexError,
    ReductionFailure,
    LyapunovSingular,
    FeedthroughPresent,
    Unstable,
    DefectiveEigenproblem,
    PoleAtPoint,
    CharacteristicRoot,
    OracleDivergence,
    NoGradient,
    UnsupportedMode,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tauh2

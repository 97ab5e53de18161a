#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tauh2/types.hpp"

namespace tauh2 {

/// Semi-explicit delay differential algebraic system
///
///     E x'(t) = sum_k A_k x(t - tau_k) + B v(t),   z(t) = C x(t)
///
/// with tau_0 = 0 implicit: `A[0]` is the undelayed matrix and `A[k]` for
/// k >= 1 multiplies x(t - delays[k-1]).
struct DdaeSystem {
    Matrix E;
    std::vector<Matrix> A;
    Matrix B;
    Matrix C;
    std::vector<double> delays;

    Index n() const { return E.rows(); }
    Index p() const { return B.cols(); }
    Index q() const { return C.rows(); }
    int m() const { return static_cast<int>(delays.size()); }
    double max_delay() const { return delays.empty() ? 0.0 : delays.back(); }

    /// Throws InvalidInput / OrderingViolation when an invariant is broken.
    void validate() const;
};

/// Exact transfer function C (sE - sum A_k exp(-tau_k s))^{-1} B.
/// Throws CharacteristicRoot when the characteristic matrix is singular at s.
CMatrix transfer_function(const DdaeSystem& sys, Complex s);

/// Repeated evaluation of the transfer function with the complex copies of
/// the system matrices prepared once.
class TransferEvaluator {
public:
    explicit TransferEvaluator(const DdaeSystem& sys);
    /// Throws CharacteristicRoot when the characteristic matrix is singular at s.
    CMatrix operator()(Complex s) const;

private:
    CMatrix E_;
    std::vector<CMatrix> A_;
    CMatrix B_, C_;
    std::vector<double> delays_;
};

enum class MatrixKind { A, B, C };

struct MatrixTarget {
    MatrixKind kind = MatrixKind::A;
    int delay_index = 0;  // only meaningful for MatrixKind::A
    Index row = 0;
    Index col = 0;
    double coefficient = 1.0;
};

/// Delay target; `delay_index` is 1-based (tau_1 ... tau_m).
struct DelayTarget {
    int delay_index = 1;
};

using ParameterTarget = std::variant<MatrixTarget, DelayTarget>;

/// A named scalar entering the system affinely: every matrix target entry is
/// set to coefficient * value, every delay target is set to value.
struct ParameterBinding {
    std::string name;
    std::vector<ParameterTarget> targets;
    double value = 0.0;
    std::optional<std::pair<double, double>> bounds;

    bool within_bounds(double v) const {
        return !bounds || (v >= bounds->first && v <= bounds->second);
    }
};

/// Throws InvalidInput on out-of-range targets or a doubly bound entry.
void check_bindings(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings);

/// Writes every binding's value into a copy of `sys` and re-validates it.
/// A delay ordering/positivity failure raises OrderingViolation.
DdaeSystem apply_parameters(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings);

/// Same, with the values taken from `values` (one per binding, same order).
DdaeSystem apply_parameters(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings,
                            const std::vector<double>& values);

/// Reads the current parameter values back out of `sys`.
std::vector<double> read_parameters(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings);

/// Position of the binding called `name`, if any.
std::optional<std::size_t> find_binding(const std::vector<ParameterBinding>& bindings,
                                        const std::string& name);

// ---------------------------------------------------------------------------
// Example corpus

enum class ExampleTag {
    ConvSys,
    IntroFeedthrough,
    Rdde1,
    Rdde2,
    Rdde3,
    Ndde1,
    Ndde2,
};

struct ExampleId {
    ExampleTag tag = ExampleTag::ConvSys;
    /// conv-sys switches (delta_r1, delta_r2, delta_n1, delta_n2).
    std::array<int, 4> delta{1, 1, 0, 0};
    /// intro-feedthrough delays (tau_1, tau_2, tau_3) in the order of its three coefficient matrices.
    std::array<double, 3> intro_delays{1.0, 2.0, 3.0};
};

struct Example {
    std::string tag;
    DdaeSystem system;
    std::vector<ParameterBinding> bindings;
    /// Parameters optimized by default in a synthesis run.
    std::vector<std::string> default_free;
};

/// Parses "rdde-1", "conv-sys", ...; throws InvalidInput for unknown tags.
ExampleTag parse_example_tag(const std::string& tag);
std::string to_string(ExampleTag tag);
std::vector<std::string> example_tags();

/// Throws InvalidInput for a delta vector with entries outside {0,1} or wrong length.
std::array<int, 4> parse_delta(const std::vector<int>& delta);

Example build_example(const ExampleId& id);

/// Error system for H2 model reduction: blkdiag(A_k, A_kr), (B; B_r), (C, -C_r).
/// Both systems must share their delays.
DdaeSystem error_system(const DdaeSystem& full, const DdaeSystem& reduced);

}  // namespace tauh2

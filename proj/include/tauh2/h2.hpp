#pragma once

#include <string>
#include <vector>

#include "tauh2/discretization.hpp"
#include "tauh2/reduction.hpp"
#include "tauh2/types.hpp"

namespace tauh2 {

struct H2Result {
    double norm = 0.0;
    double norm_squared = 0.0;
    /// tr(C P C^T) and tr(B^T Q B); equal up to roundoff.
    double primal_trace = 0.0;
    double dual_trace = 0.0;
    /// Solutions of  A P E11^T + E11 P A^T + B B^T = 0  and
    /// A^T Q E11 + E11^T Q A + C^T C = 0.
    Matrix P;
    Matrix Q;
    /// Eigenvalues of (A, E11) that were reflected across the imaginary axis.
    std::vector<Complex> flipped_poles;
    /// Reduced state matrix after flipping (equal to the input otherwise).
    Matrix A_used;
    double abscissa = 0.0;
    double E11_condition = 1.0;
    int degree = 0;
    Mode mode = Mode::Polynomial;
    std::vector<std::string> warnings;

    bool flipped() const { return !flipped_poles.empty(); }
};

/// Relative size below which the feedthrough term D is treated as zero.
inline constexpr double kFeedthroughTolerance = 1e-8;
/// Condition limit on an eigenvalue reflected by pole flipping.
inline constexpr double kFlipConditionCap = 1e10;

/// H2-norm of the reduced ODE. Unstable spectra are reflected when
/// `allow_flip` is set and rejected with ErrorKind::Unstable otherwise.
H2Result h2_norm(const ReducedOde& r, bool allow_flip = false);

/// Discretize, reduce and evaluate in one call.
H2Result h2_norm(const DdaeSystem& sys, int degree, Mode mode = Mode::Polynomial, bool allow_flip = false);

/// Reflects the unstable eigenvalues of M across the imaginary axis while
/// keeping their eigenvectors: each unstable spectral term
/// lambda x y^* / (y^* x) becomes -conj(lambda) x y^* / (y^* x). Conjugate
/// pairs are flipped together so the result stays real. Appends the
/// reflected eigenvalues to `flipped`.
Matrix flip_unstable_poles(const Matrix& M, const CVector& eigenvalues, std::vector<Complex>& flipped);
Matrix flip_unstable_poles(const Matrix& M, std::vector<Complex>& flipped);

}  // namespace tauh2

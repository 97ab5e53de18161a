#pragma once

#include "tauh2/types.hpp"

namespace tauh2 {

enum class LyapunovSide { Primal, Dual };

/// Dense Lyapunov solver for a fixed matrix M, built on one complex Schur
/// decomposition M = Z T Z^*. Both the primal equation
///     M X + X M^T + F = 0
/// and the dual equation
///     M^T X + X M + F = 0
/// reuse the same factorization.
class LyapunovSolver {
public:
    explicit LyapunovSolver(const Matrix& M);

    /// Eigenvalues of M (diagonal of the Schur factor).
    CVector eigenvalues() const { return T_.diagonal(); }
    double spectral_abscissa() const;

    /// Solves for symmetric F; throws LyapunovSingular when some pair of
    /// eigenvalues satisfies lambda_i + conj(lambda_j) = 0.
    Matrix solve(const Matrix& F, LyapunovSide side = LyapunovSide::Primal) const;

private:
    void check_solvable() const;

    CMatrix Z_;
    CMatrix T_;
    double scale_ = 0.0;
};

/// Generalized equations with invertible E:
///   primal: A X E^T + E X A^T + F = 0
///   dual:   A^T X E + E^T X A + F = 0
Matrix lyapunov_solve(const Matrix& A, const Matrix& E, const Matrix& F, LyapunovSide side);

/// Frobenius residual of the generalized equation for a candidate X.
double lyapunov_residual(const Matrix& A, const Matrix& E, const Matrix& F, const Matrix& X,
                         LyapunovSide side);

}  // namespace tauh2

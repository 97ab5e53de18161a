#include "tauh2/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tauh2/error.hpp"

namespace tauh2 {

namespace {

// Converts a real Schur form (Z, T) in place to a complex upper triangular
// Schur form by one Givens rotation per 2x2 diagonal block.
void real_to_complex_schur(CMatrix& Z, CMatrix& T) {
    const Index n = T.rows();
    for (Index m = n - 1; m >= 1; --m) {
        const Complex sub = T(m, m - 1);
        if (sub == Complex(0.0)) continue;
        const Complex a = T(m - 1, m - 1), b = T(m - 1, m), c = T(m, m - 1), d = T(m, m);
        const Complex half_trace = 0.5 * (a + d);
        const Complex disc = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
        const Complex mu = half_trace + disc - d;
        const double r = std::hypot(std::abs(mu), std::abs(sub));
        const Complex cs = mu / r;
        const Complex sn = sub / r;
        // G = [conj(cs) sn; -sn cs], applied as T <- G T G^*, Z <- Z G^*.
        for (Index j = m - 1; j < n; ++j) {
            const Complex t1 = T(m - 1, j), t2 = T(m, j);
            T(m - 1, j) = std::conj(cs) * t1 + sn * t2;
            T(m, j) = -sn * t1 + cs * t2;
        }
        for (Index i = 0; i <= m; ++i) {
            const Complex t1 = T(i, m - 1), t2 = T(i, m);
            T(i, m - 1) = cs * t1 + std::conj(sn) * t2;
            T(i, m) = -std::conj(sn) * t1 + std::conj(cs) * t2;
        }
        for (Index i = 0; i < n; ++i) {
            const Complex z1 = Z(i, m - 1), z2 = Z(i, m);
            Z(i, m - 1) = cs * z1 + std::conj(sn) * z2;
            Z(i, m) = -std::conj(sn) * z1 + std::conj(cs) * z2;
        }
        T(m, m - 1) = Complex(0.0);
    }
}

}  // namespace

LyapunovSolver::LyapunovSolver(const Matrix& M) {
    if (M.rows() != M.cols()) throw Error(ErrorKind::InvalidInput, "Lyapunov matrix must be square");
    if (M.size() == 0) return;
    Eigen::RealSchur<Matrix> schur(M);
    if (schur.info() != Eigen::Success) {
        throw Error(ErrorKind::LyapunovSingular, "Schur decomposition did not converge");
    }
    Z_ = schur.matrixU().cast<Complex>();
    T_ = schur.matrixT().cast<Complex>();
    real_to_complex_schur(Z_, T_);
    scale_ = std::max(1.0, M.cwiseAbs().maxCoeff());
    check_solvable();
}

double LyapunovSolver::spectral_abscissa() const {
    if (T_.size() == 0) return -std::numeric_limits<double>::infinity();
    return T_.diagonal().real().maxCoeff();
}

void LyapunovSolver::check_solvable() const {
    const Index n = T_.rows();
    const double tol = 1e3 * std::numeric_limits<double>::epsilon() * scale_;
    // lambda_i + conj(lambda_j) has real part Re(l_i) + Re(l_j); the minimum
    // over pairs is attained near the abscissa.
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            if (std::abs(T_(i, i) + std::conj(T_(j, j))) <= tol) {
                throw Error(ErrorKind::LyapunovSingular,
                            "Lyapunov equation is singular: eigenvalues symmetric about the imaginary axis");
            }
        }
    }
}

Matrix LyapunovSolver::solve(const Matrix& F, LyapunovSide side) const {
    const Index n = T_.rows();
    if (F.rows() != n || F.cols() != n) throw Error(ErrorKind::InvalidInput, "Lyapunov right-hand side has wrong size");
    if (n == 0) return Matrix(0, 0);

    const CMatrix Fh = Z_.adjoint() * F.cast<Complex>() * Z_;
    CMatrix Y = CMatrix::Zero(n, n);
    CVector rhs(n);

    if (side == LyapunovSide::Primal) {
        // T Y + Y T^* = -Fh, columns from the last to the first.
        for (Index j = n - 1; j >= 0; --j) {
            rhs = -Fh.col(j);
            const Index tail = n - 1 - j;
            if (tail > 0) rhs.noalias() -= Y.rightCols(tail) * T_.row(j).tail(tail).adjoint();
            const Complex shift = std::conj(T_(j, j));
            for (Index i = n - 1; i >= 0; --i) {
                Complex acc = rhs(i);
                for (Index k = i + 1; k < n; ++k) acc -= T_(i, k) * Y(k, j);
                Y(i, j) = acc / (T_(i, i) + shift);
            }
        }
    } else {
        // T^* Y + Y T = -Fh, columns from the first to the last.
        for (Index j = 0; j < n; ++j) {
            rhs = -Fh.col(j);
            if (j > 0) rhs.noalias() -= Y.leftCols(j) * T_.col(j).head(j);
            const Complex shift = T_(j, j);
            for (Index i = 0; i < n; ++i) {
                Complex acc = rhs(i);
                for (Index k = 0; k < i; ++k) acc -= std::conj(T_(k, i)) * Y(k, j);
                Y(i, j) = acc / (std::conj(T_(i, i)) + shift);
            }
        }
    }

    Matrix X = (Z_ * Y * Z_.adjoint()).real();
    return 0.5 * (X + X.transpose());
}

Matrix lyapunov_solve(const Matrix& A, const Matrix& E, const Matrix& F, LyapunovSide side) {
    if (A.rows() == 0) return Matrix(0, 0);
    Eigen::PartialPivLU<Matrix> lu(E);
    const Matrix M = lu.solve(A);
    const LyapunovSolver solver(M);
    if (side == LyapunovSide::Primal) {
        // E^{-1}: A X E^T + E X A^T = -F  <=>  M X + X M^T = -E^{-1} F E^{-T}
        const Matrix G = lu.solve(lu.solve(F).transpose()).transpose();
        return solver.solve(0.5 * (G + G.transpose()), LyapunovSide::Primal);
    }
    // Y = E^T X E:  M^T Y + Y M = -F, then X = E^{-T} Y E^{-1}.
    const Matrix Y = solver.solve(F, LyapunovSide::Dual);
    Eigen::PartialPivLU<Matrix> lut(E.transpose());
    const Matrix X = lut.solve(lut.solve(Y).transpose());
    return 0.5 * (X + X.transpose());
}

double lyapunov_residual(const Matrix& A, const Matrix& E, const Matrix& F, const Matrix& X,
                         LyapunovSide side) {
    if (side == LyapunovSide::Primal) return (A * X * E.transpose() + E * X * A.transpose() + F).norm();
    return (A.transpose() * X * E + E.transpose() * X * A + F).norm();
}

}  // namespace tauh2

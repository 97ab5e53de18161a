#include "tauh2/h2.hpp"

#include <cmath>
#include <memory>

#include "tauh2/error.hpp"
#include "tauh2/lyapunov.hpp"

namespace tauh2 {

namespace {

// One step of inverse iteration started from a fixed pseudo-random vector.
CVector inverse_iteration(const Eigen::PartialPivLU<CMatrix>& lu, Index n) {
    CVector v(n);
    for (Index i = 0; i < n; ++i) v(i) = Complex(1.0 + 0.37 * std::sin(1.0 + i), 0.21 * std::cos(2.0 + i));
    for (int it = 0; it < 3; ++it) {
        v = lu.solve(v);
        v /= v.norm();
    }
    return v;
}

}  // namespace

Matrix flip_unstable_poles(const Matrix& M, const CVector& eigenvalues, std::vector<Complex>& flipped) {
    const Index n = M.rows();
    const CMatrix Mc = M.cast<Complex>();
    Matrix out = M;
    for (Index i = 0; i < eigenvalues.size(); ++i) {
        const Complex lambda = eigenvalues(i);
        if (lambda.real() < 0.0) continue;
        const bool is_real = std::abs(lambda.imag()) <= 1e-10 * std::max(1.0, std::abs(lambda));
        // Complex poles are handled once per conjugate pair.
        if (!is_real && lambda.imag() < 0.0) continue;

        const CMatrix shifted = Mc - lambda * CMatrix::Identity(n, n);
        const CVector x = inverse_iteration(Eigen::PartialPivLU<CMatrix>(shifted), n);
        const CVector y = inverse_iteration(Eigen::PartialPivLU<CMatrix>(shifted.adjoint()), n);
        const Complex yx = y.dot(x);  // y^* x
        const double cond = 1.0 / std::abs(yx);
        if (!(cond <= kFlipConditionCap)) {
            throw Error(ErrorKind::DefectiveEigenproblem,
                        "unstable eigenvalue too ill-conditioned for pole flipping; try a larger degree");
        }
        // M = sum_i lambda_i x_i y_i^* / (y_i^* x_i); replace lambda by -conj(lambda).
        const CMatrix term = (-2.0 * lambda.real() / yx) * (x * y.adjoint());
        if (is_real) {
            out += term.real();
            flipped.push_back(Complex(lambda.real(), 0.0));
        } else {
            out += 2.0 * term.real();
            flipped.push_back(lambda);
            flipped.push_back(std::conj(lambda));
        }
    }
    return out;
}

Matrix flip_unstable_poles(const Matrix& M, std::vector<Complex>& flipped) {
    return flip_unstable_poles(M, LyapunovSolver(M).eigenvalues(), flipped);
}

namespace {

// Parlett-Reinsch diagonal balancing with power-of-two factors.
Vector balance_scaling(const Matrix& M0) {
    const Index n = M0.rows();
    Matrix M = M0;
    Vector d = Vector::Ones(n);
    constexpr double radix = 2.0, sqrdx = radix * radix;
    bool done = false;
    for (int sweep = 0; !done && sweep < 100; ++sweep) {
        done = true;
        for (Index i = 0; i < n; ++i) {
            double c = 0.0, rr = 0.0;
            for (Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(M(j, i));
                rr += std::abs(M(i, j));
            }
            if (c == 0.0 || rr == 0.0) continue;
            double g = rr / radix, f = 1.0;
            const double s = c + rr;
            while (c < g) { f *= radix; c *= sqrdx; }
            g = rr * radix;
            while (c > g) { f /= radix; c /= sqrdx; }
            if ((c + rr) / f < 0.95 * s) {
                done = false;
                d(i) *= f;
                M.row(i) /= f;
                M.col(i) *= f;
            }
        }
    }
    return d;
}

}  // namespace

H2Result h2_norm(const ReducedOde& r, bool allow_flip) {
    H2Result res;
    res.degree = r.degree;
    res.mode = r.mode;
    res.E11_condition = r.E11_condition;
    if (r.E11_condition > 1e8) res.warnings.push_back("E11 is ill-conditioned");

    const double dscale = std::max(1.0, r.C.norm() * r.B.norm());
    if (r.D.size() && r.D.norm() > kFeedthroughTolerance * dscale) {
        throw Error(ErrorKind::FeedthroughPresent, "reduced system has a feedthrough term; the H2-norm is infinite");
    }

    const Index n = r.order();
    if (n == 0) {
        res.A_used = r.A;
        res.P = res.Q = Matrix(0, 0);
        return res;
    }
    Eigen::PartialPivLU<Matrix> lu(r.E11);
    const Matrix M0 = lu.solve(r.A);
    const Matrix Bp = lu.solve(r.B);

    // Work in balanced coordinates M = D^-1 M0 D to curb rounding in the traces.
    // Pole flipping commutes with the similarity, so it is applied there too.
    const Vector d = balance_scaling(M0);
    const Vector dinv = d.cwiseInverse();
    Matrix M = dinv.asDiagonal() * M0 * d.asDiagonal();
    auto solver = std::make_unique<LyapunovSolver>(M);
    res.abscissa = solver->spectral_abscissa();
    if (res.abscissa >= 0.0) {
        if (!allow_flip) {
            throw Error(ErrorKind::Unstable, "discretized system is unstable (abscissa " +
                                                 std::to_string(res.abscissa) + "); enable pole flipping");
        }
        M = flip_unstable_poles(M, solver->eigenvalues(), res.flipped_poles);
        solver = std::make_unique<LyapunovSolver>(M);
        res.abscissa = solver->spectral_abscissa();
    }
    res.A_used = r.E11 * (d.asDiagonal() * M * dinv.asDiagonal());

    const Matrix Bb = dinv.asDiagonal() * Bp;
    const Matrix Cb = r.C * d.asDiagonal();
    const Matrix Pb = solver->solve(Bb * Bb.transpose(), LyapunovSide::Primal);
    const Matrix Yb = solver->solve(Cb.transpose() * Cb, LyapunovSide::Dual);
    res.P = d.asDiagonal() * Pb * d.asDiagonal();
    res.P = (0.5 * (res.P + res.P.transpose())).eval();
    const Matrix Y = dinv.asDiagonal() * Yb * dinv.asDiagonal();
    Eigen::PartialPivLU<Matrix> lut(r.E11.transpose());
    const Matrix Qt = lut.solve(Y);
    const Matrix Q = lut.solve(Qt.transpose());
    res.Q = 0.5 * (Q + Q.transpose());

    res.primal_trace = (r.C * res.P * r.C.transpose()).trace();
    res.dual_trace = (r.B.transpose() * res.Q * r.B).trace();
    res.norm_squared = std::max(0.0, res.primal_trace);
    res.norm = std::sqrt(res.norm_squared);
    return res;
}

H2Result h2_norm(const DdaeSystem& sys, int degree, Mode mode, bool allow_flip) {
    return h2_norm(split_and_reduce(discretize(sys, degree, mode)), allow_flip);
}

}  // namespace tauh2

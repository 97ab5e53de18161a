#include "tauh2/discretization.hpp"

#include <string>

#include "tauh2/error.hpp"

namespace tauh2 {

namespace {

constexpr double kSingularRcond = 1e-14;

Matrix sum_delayed_evaluations(const DdaeSystem& sys, const BasisSpec& basis) {
    Matrix top = sys.A[0] * eval_functional(basis, 0.0, sys.n());
    for (int k = 1; k <= sys.m(); ++k) {
        const double tau = sys.delays[static_cast<std::size_t>(k - 1)];
        top += sys.A[static_cast<std::size_t>(k)] * eval_functional(basis, -tau, sys.n());
    }
    return top;
}

TauDiscretization discretize_polynomial(const DdaeSystem& sys, int degree) {
    const Index n = sys.n();
    const BasisSpec basis = polynomial_basis(sys.delays, degree);
    const Index dim = n * (degree + 1);

    TauDiscretization d;
    d.mode = Mode::Polynomial;
    d.degree = degree;
    d.n = n;
    d.delays = sys.delays;
    d.bases = {basis};

    const Matrix eps0 = eval_functional(basis, 0.0, n);
    d.E.resize(dim, dim);
    d.E.topRows(n) = sys.E * eps0;
    d.E.bottomRows(dim - n) = truncation_matrix(basis, n);

    d.A.resize(dim, dim);
    d.A.topRows(n) = sum_delayed_evaluations(sys, basis);
    d.A.bottomRows(dim - n) = derivative_matrix(basis, n);

    d.B = Matrix::Zero(dim, sys.p());
    d.B.topRows(n) = sys.B;
    d.C = sys.C * eps0;
    return d;
}

TauDiscretization discretize_spline(const DdaeSystem& sys, int degree) {
    const int m = sys.m();
    if (m < 1) throw Error(ErrorKind::InvalidInput, "spline discretization needs at least one delay");
    const Index n = sys.n();
    const Index block = n * (degree + 1);
    const Index tau_rows = n * degree;
    const Index dim = m * block;

    TauDiscretization d;
    d.mode = Mode::Spline;
    d.degree = degree;
    d.n = n;
    d.delays = sys.delays;
    d.bases = spline_bases(sys.delays, degree);

    d.E = Matrix::Zero(dim, dim);
    d.A = Matrix::Zero(dim, dim);

    const BasisSpec& first = d.bases.front();
    d.E.block(0, 0, n, block) = sys.E * eval_functional(first, 0.0, n);
    d.A.block(0, 0, n, block) = sys.A[0] * eval_functional(first, 0.0, n);
    for (int k = 1; k <= m; ++k) {
        const BasisSpec& seg = d.bases[static_cast<std::size_t>(k - 1)];
        const Index col = (k - 1) * block;
        d.A.block(0, col, n, block) += sys.A[static_cast<std::size_t>(k)] * eval_functional(seg, seg.lo, n);

        const Index row = n + (k - 1) * tau_rows;
        d.E.block(row, col, tau_rows, block) = truncation_matrix(seg, n);
        d.A.block(row, col, tau_rows, block) = derivative_matrix(seg, n);
    }
    for (int k = 1; k < m; ++k) {
        const BasisSpec& left = d.bases[static_cast<std::size_t>(k - 1)];
        const BasisSpec& right = d.bases[static_cast<std::size_t>(k)];
        const Index row = n + m * tau_rows + (k - 1) * n;
        d.A.block(row, (k - 1) * block, n, block) = eval_functional(left, left.lo, n);
        d.A.block(row, k * block, n, block) = -eval_functional(right, right.hi, n);
    }

    d.B = Matrix::Zero(dim, sys.p());
    d.B.topRows(n) = sys.B;
    d.C = Matrix::Zero(sys.q(), dim);
    d.C.leftCols(block) = sys.C * eval_functional(first, 0.0, n);
    return d;
}

// Coefficients of the scalar polynomial with value 1 at `anchor` satisfying
// the tau conditions D c = s T c on `basis`.
CVector unit_tau_solution(const BasisSpec& basis, double anchor, Complex s) {
    const int N = basis.degree;
    CMatrix M(N + 1, N + 1);
    M.row(0) = basis_values(basis, anchor).transpose().cast<Complex>();
    CMatrix tail = -scalar_derivative_matrix(basis).cast<Complex>();
    tail.leftCols(N) += s * CMatrix::Identity(N, N);
    M.bottomRows(N) = tail;
    Eigen::PartialPivLU<CMatrix> lu(M);
    if (!(lu.rcond() > kSingularRcond)) {
        throw Error(ErrorKind::PoleAtPoint, "query point is a pole of the rational approximation");
    }
    CVector rhs = CVector::Zero(N + 1);
    rhs(0) = 1.0;
    return lu.solve(rhs);
}

Complex eval_coeffs(const BasisSpec& basis, const CVector& c, double theta) {
    return basis_values(basis, theta).cast<Complex>().dot(c);
}

}  // namespace

const char* to_string(Mode mode) { return mode == Mode::Polynomial ? "poly" : "spline"; }

Mode parse_mode(const std::string& text) {
    if (text == "poly" || text == "polynomial") return Mode::Polynomial;
    if (text == "spline") return Mode::Spline;
    throw Error(ErrorKind::InvalidInput, "unknown discretization mode '" + text + "'");
}

BasisSpec polynomial_basis(std::span<const double> delays, int degree) {
    const double span = delays.empty() ? 1.0 : delays.back();
    return BasisSpec::legendre(degree, -span, 0.0);
}

std::vector<BasisSpec> spline_bases(std::span<const double> delays, int degree) {
    std::vector<BasisSpec> out;
    double right = 0.0;
    for (double tau : delays) {
        out.push_back(BasisSpec::legendre(degree, -tau, -right));
        right = tau;
    }
    return out;
}

TauDiscretization discretize(const DdaeSystem& sys, int degree, Mode mode) {
    sys.validate();
    if (degree < 1) throw Error(ErrorKind::InvalidInput, "discretization degree must be at least 1");
    return mode == Mode::Polynomial ? discretize_polynomial(sys, degree) : discretize_spline(sys, degree);
}

Complex rational_exp_at(std::span<const double> delays, int degree, Mode mode, Complex s, double theta) {
    if (mode == Mode::Polynomial || delays.size() <= 1) {
        const BasisSpec basis = polynomial_basis(delays, degree);
        return eval_coeffs(basis, unit_tau_solution(basis, 0.0, s), theta);
    }
    const auto bases = spline_bases(delays, degree);
    if (!bases.back().contains(theta)) {
        throw Error(ErrorKind::InvalidInput, "evaluation point outside [-tau_m, 0]");
    }
    // r^(k)(theta) = r^(k-1)(-tau_{k-1}) rho^(k)(theta)
    Complex scale = 1.0;
    for (const auto& seg : bases) {
        const CVector rho = unit_tau_solution(seg, seg.hi, s);
        if (theta >= seg.lo - 1e-12 * seg.length()) return scale * eval_coeffs(seg, rho, theta);
        scale *= eval_coeffs(seg, rho, seg.lo);
    }
    return scale;
}

Complex rational_exp(std::span<const double> delays, int degree, Mode mode, Complex s, int k) {
    if (k < 0 || k > static_cast<int>(delays.size())) {
        throw Error(ErrorKind::InvalidInput, "delay index out of range");
    }
    if (k == 0) return 1.0;
    if (mode == Mode::Polynomial) {
        return rational_exp_at(delays, degree, mode, s, -delays[static_cast<std::size_t>(k - 1)]);
    }
    const auto bases = spline_bases(delays, degree);
    Complex r = 1.0;
    for (int j = 0; j < k; ++j) {
        const auto& seg = bases[static_cast<std::size_t>(j)];
        r *= eval_coeffs(seg, unit_tau_solution(seg, seg.hi, s), seg.lo);
    }
    return r;
}

CMatrix discretized_transfer(const TauDiscretization& d, Complex s) {
    const CMatrix M = s * d.E.cast<Complex>() - d.A.cast<Complex>();
    Eigen::PartialPivLU<CMatrix> lu(M);
    if (!(lu.rcond() > kSingularRcond)) {
        throw Error(ErrorKind::CharacteristicRoot, "s E_N - A_N is singular at the query point");
    }
    return d.C.cast<Complex>() * lu.solve(d.B.cast<Complex>());
}

CMatrix rational_transfer(const DdaeSystem& sys, int degree, Mode mode, Complex s) {
    CMatrix M = s * sys.E.cast<Complex>() - sys.A[0].cast<Complex>();
    for (int k = 1; k <= sys.m(); ++k) {
        M -= rational_exp(sys.delays, degree, mode, s, k) * sys.A[static_cast<std::size_t>(k)].cast<Complex>();
    }
    Eigen::PartialPivLU<CMatrix> lu(M);
    if (!(lu.rcond() > kSingularRcond)) {
        throw Error(ErrorKind::CharacteristicRoot, "approximate characteristic matrix is singular");
    }
    return sys.C.cast<Complex>() * lu.solve(sys.B.cast<Complex>());
}

}  // namespace tauh2

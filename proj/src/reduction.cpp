#include "tauh2/reduction.hpp"

#include <cmath>
#include <limits>

#include "tauh2/error.hpp"

namespace tauh2 {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Kernels {
    RankInfo rank;
    Matrix row_range;   // left singular vectors of nonzero singular values, as rows
    Matrix row_kernel;  // rows spanning ker E^T
    Matrix col_range;   // right singular vectors of nonzero singular values
    Matrix col_kernel;  // columns spanning ker E
    Vector sigma;
};

template <typename Svd>
Kernels split_kernels(const Matrix& M) {
    Svd svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Kernels k;
    k.sigma = svd.singularValues();
    k.rank = numerical_rank(k.sigma, M.rows(), M.cols());
    const Index r = k.rank.rank;
    k.row_range = svd.matrixU().leftCols(r).transpose();
    k.row_kernel = svd.matrixU().rightCols(M.rows() - r).transpose();
    k.col_range = svd.matrixV().leftCols(r);
    k.col_kernel = svd.matrixV().rightCols(M.cols() - r);
    return k;
}

double smallest_singular_value(const Matrix& M) {
    if (M.size() == 0) return std::numeric_limits<double>::infinity();
    return Eigen::JacobiSVD<Matrix>(M).singularValues().minCoeff();
}

double condition_number(const Matrix& M) {
    if (M.size() == 0) return 1.0;
    const Vector s = Eigen::JacobiSVD<Matrix>(M).singularValues();
    const double lo = s.minCoeff();
    return lo > 0.0 ? s.maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

double index_tolerance(const Matrix& A0) { return 1e-12 * std::max(1.0, A0.norm()); }

}  // namespace

RankInfo numerical_rank(const Vector& singular_values, Index rows, Index cols) {
    RankInfo info;
    const double smax = singular_values.size() ? singular_values.maxCoeff() : 0.0;
    info.threshold = kEps * static_cast<double>(std::max(rows, cols)) * smax;
    Index r = 0;
    for (Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values(i) > info.threshold) ++r;
        const double s = singular_values(i);
        if (s > 0.0 && s > info.threshold / 10.0 && s < 10.0 * info.threshold) info.ambiguous = true;
    }
    info.rank = r;
    const Index full = std::min(rows, cols);
    if (r == 0 || r == full) {
        info.gap = std::numeric_limits<double>::infinity();
    } else {
        const double below = singular_values(r);
        info.gap = below > 0.0 ? singular_values(r - 1) / below : std::numeric_limits<double>::infinity();
    }
    return info;
}

IndexVerdict index_check(const DdaeSystem& sys) {
    const Kernels k = split_kernels<Eigen::JacobiSVD<Matrix>>(sys.E);
    IndexVerdict v;
    v.nu = sys.n() - k.rank.rank;
    v.tolerance = index_tolerance(sys.A[0]);
    if (v.nu == 0) {
        v.smallest_singular_value = std::numeric_limits<double>::infinity();
        v.index_at_most_one = true;
        return v;
    }
    v.smallest_singular_value = smallest_singular_value(k.row_kernel * sys.A[0] * k.col_kernel);
    v.index_at_most_one = v.smallest_singular_value > v.tolerance;
    return v;
}

StandardForm standard_form(const DdaeSystem& sys) {
    sys.validate();
    const Kernels k = split_kernels<Eigen::JacobiSVD<Matrix>>(sys.E);
    StandardForm sf;
    sf.rank = k.rank;
    sf.nu = sys.n() - k.rank.rank;
    if (k.rank.ambiguous) sf.warnings.push_back("ill-conditioned rank of E: a singular value is close to the threshold");

    const Matrix M = k.row_kernel * sys.A[0] * k.col_kernel;
    if (sf.nu > 0 && !(smallest_singular_value(M) > index_tolerance(sys.A[0]))) {
        throw Error(ErrorKind::IndexError, "system has differentiation index greater than one");
    }
    sf.Ubar = k.row_kernel;
    sf.Vbar = sf.nu > 0 ? Matrix(-k.col_kernel * M.inverse()) : Matrix(sys.n(), 0);
    sf.Vbar_perp = k.col_range;
    const Matrix E11 = k.row_range * sys.E * k.col_range;
    sf.Ubar_perp = E11.size() ? Matrix(E11.inverse() * k.row_range) : Matrix(0, sys.n());

    for (const auto& Ak : sys.A) {
        sf.A11.push_back(sf.Ubar_perp * Ak * sf.Vbar_perp);
        sf.A12.push_back(sf.Ubar_perp * Ak * sf.Vbar);
        sf.A21.push_back(sf.Ubar * Ak * sf.Vbar_perp);
        sf.A22.push_back(sf.Ubar * Ak * sf.Vbar);
    }
    sf.B1 = sf.Ubar_perp * sys.B;
    sf.B2 = sf.Ubar * sys.B;
    sf.C1 = sys.C * sf.Vbar_perp;
    sf.C2 = sys.C * sf.Vbar;
    return sf;
}

Matrix ReducedOde::solve_A22(const Matrix& X) const {
    if (A22.size() == 0) return Matrix(0, X.cols());
    return A22_lu.solve(X);
}

ReducedOde split_and_reduce(const TauDiscretization& d) {
    const Kernels k = split_kernels<Eigen::BDCSVD<Matrix>>(d.E);
    ReducedOde r;
    r.rank = k.rank;
    r.mode = d.mode;
    r.degree = d.degree;
    r.U = k.row_kernel;
    r.U_perp = k.row_range;
    r.V = k.col_kernel;
    r.V_perp = k.col_range;
    if (r.U.rows() != r.V.cols()) {
        throw Error(ErrorKind::ReductionFailure, "left and right nullspaces of E_N differ in dimension");
    }

    r.E11 = r.U_perp * d.E * r.V_perp;
    const Matrix AV = d.A * r.V;
    const Matrix AVp = d.A * r.V_perp;
    const Matrix A11 = r.U_perp * AVp;
    r.A12 = r.U_perp * AV;
    r.A21 = r.U * AVp;
    r.A22 = r.U * AV;
    const Matrix B1 = r.U_perp * d.B;
    r.B2 = r.U * d.B;
    const Matrix C1 = d.C * r.V_perp;
    r.C2 = d.C * r.V;

    r.E11_condition = condition_number(r.E11);
    r.A22_condition = condition_number(r.A22);
    if (!(r.A22_condition < kA22ConditionCap)) {
        throw Error(ErrorKind::ReductionFailure,
                    "algebraic block A22 is numerically singular (condition " + std::to_string(r.A22_condition) + ")");
    }
    if (r.A22.size()) r.A22_lu.compute(r.A22);

    const Matrix X21 = r.solve_A22(r.A21);
    const Matrix XB = r.solve_A22(r.B2);
    r.A = A11 - r.A12 * X21;
    r.B = B1 - r.A12 * XB;
    r.C = C1 - r.C2 * X21;
    r.D = -r.C2 * XB;
    return r;
}

}  // namespace tauh2

#pragma once

#include <string>
#include <vector>

#include "tauh2/discretization.hpp"
#include "tauh2/model.hpp"
#include "tauh2/types.hpp"

namespace tauh2 {

/// Numerical rank with the threshold eps * max(rows, cols) * sigma_max.
struct RankInfo {
    Index rank = 0;
    double threshold = 0.0;
    /// sigma_rank / sigma_{rank+1}; infinity when one side is empty.
    double gap = 0.0;
    /// Some singular value lies within a factor 10 of the threshold.
    bool ambiguous = false;
};

struct IndexVerdict {
    bool index_at_most_one = true;
    Index nu = 0;
    /// Smallest singular value of the kernel-projected A0 (infinity when nu = 0).
    double smallest_singular_value = 0.0;
    double tolerance = 0.0;
};

/// Splitting x = Vbar_perp x1 + Vbar x2, rows (Ubar_perp; Ubar), normalized so
/// that Ubar A0 Vbar = -I and Ubar_perp E Vbar_perp = I.
struct StandardForm {
    Index nu = 0;
    Matrix Vbar;       // n x nu
    Matrix Vbar_perp;  // n x (n - nu)
    Matrix Ubar;       // nu x n
    Matrix Ubar_perp;  // (n - nu) x n
    std::vector<Matrix> A11, A12, A21, A22;  // indexed by delay k = 0..m
    Matrix B1, B2, C1, C2;
    RankInfo rank;
    std::vector<std::string> warnings;
};

/// Differentiation-index test on the kernels of E and E^T.
IndexVerdict index_check(const DdaeSystem& sys);

/// Throws IndexError when the system has index greater than one.
StandardForm standard_form(const DdaeSystem& sys);

/// Implicit ODE  E11 x1' = A x1 + B v,  z = C x1 + D v  obtained from the
/// discretization by nullspace splitting and Schur-complement elimination.
struct ReducedOde {
    Matrix E11;
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    // Left projectors are stored with orthonormal rows, right ones with
    // orthonormal columns.
    Matrix U, U_perp, V, V_perp;
    Matrix A12, A21, A22;
    Matrix B2, C2;
    Eigen::PartialPivLU<Matrix> A22_lu;

    double E11_condition = 1.0;
    double A22_condition = 1.0;
    RankInfo rank;
    Mode mode = Mode::Polynomial;
    int degree = 0;

    Index order() const { return A.rows(); }
    /// A22^{-1} X, empty-safe.
    Matrix solve_A22(const Matrix& X) const;
};

/// Condition-number cap on A22 above which the reduction is rejected.
inline constexpr double kA22ConditionCap = 1e12;

/// Throws ReductionFailure when A22 is numerically singular.
ReducedOde split_and_reduce(const TauDiscretization& d);

/// Rank of a matrix from its singular values.
RankInfo numerical_rank(const Vector& singular_values, Index rows, Index cols);

}  // namespace tauh2

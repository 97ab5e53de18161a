#pragma once

#include "tauh2/types.hpp"

namespace tauh2 {

/// Shifted Legendre basis phi_0..phi_N on [lo, hi], mapped from [-1, 1] so
/// that phi_j(hi) = 1 and phi_j(lo) = (-1)^j.
///
/// All block operators below use coefficient-major ordering: for an
/// n-dimensional state, entry j*n + i holds the coefficient of phi_j for
/// state component i.
struct BasisSpec {
    int degree = 1;
    double lo = -1.0;
    double hi = 0.0;

    /// Validates degree >= 1 and lo < hi; throws InvalidInput otherwise.
    static BasisSpec legendre(int degree, double lo, double hi);

    double length() const { return hi - lo; }
    /// Affine map from the basis domain onto [-1, 1].
    double to_reference(double theta) const { return 2.0 * (theta - lo) / (hi - lo) - 1.0; }
    bool contains(double theta) const;
};

/// Classical Legendre values P_0(x) ... P_N(x) by three-term recurrence.
Vector legendre_values(int degree, double x);
/// Derivatives P_0'(x) ... P_N'(x).
Vector legendre_derivatives(int degree, double x);

/// phi_0(theta) ... phi_N(theta). Throws InvalidInput outside the domain.
Vector basis_values(const BasisSpec& basis, double theta);
/// phi_0'(theta) ... phi_N'(theta).
Vector basis_derivatives(const BasisSpec& basis, double theta);

/// Scalar derivative operator: N x (N+1) matrix mapping degree-N
/// coefficients to the coefficients of the derivative in phi_0..phi_{N-1}.
Matrix scalar_derivative_matrix(const BasisSpec& basis);

/// Block evaluation functional [eps_theta]: n x n(N+1).
Matrix eval_functional(const BasisSpec& basis, double theta, Index n);
/// Block derivative operator [D]: nN x n(N+1).
Matrix derivative_matrix(const BasisSpec& basis, Index n);
/// Block tau truncation [T_{N-1}] = (I_{nN} | 0): nN x n(N+1).
Matrix truncation_matrix(const BasisSpec& basis, Index n);
/// Evaluation of the derivative, [eps_theta D], padded to n x n(N+1).
Matrix derivative_eval_functional(const BasisSpec& basis, double theta, Index n);

}  // namespace tauh2

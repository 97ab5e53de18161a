#include "tauh2/orthopoly.hpp"

#include <cmath>
#include <string>

#include "tauh2/error.hpp"

namespace tauh2 {

namespace {

// Kronecker product with I_n in coefficient-major layout.
Matrix kron_identity(const Matrix& scalar, Index n) {
    Matrix out = Matrix::Zero(scalar.rows() * n, scalar.cols() * n);
    for (Index r = 0; r < scalar.rows(); ++r) {
        for (Index c = 0; c < scalar.cols(); ++c) {
            const double v = scalar(r, c);
            if (v == 0.0) continue;
            for (Index i = 0; i < n; ++i) out(r * n + i, c * n + i) = v;
        }
    }
    return out;
}

}  // namespace

BasisSpec BasisSpec::legendre(int degree, double lo, double hi) {
    if (degree < 1) throw Error(ErrorKind::InvalidInput, "basis degree must be at least 1");
    if (!(lo < hi)) throw Error(ErrorKind::InvalidInput, "basis domain must satisfy lo < hi");
    return BasisSpec{degree, lo, hi};
}

bool BasisSpec::contains(double theta) const {
    const double slack = 1e-12 * (hi - lo);
    return theta >= lo - slack && theta <= hi + slack;
}

Vector legendre_values(int degree, double x) {
    Vector P(degree + 1);
    P(0) = 1.0;
    if (degree >= 1) P(1) = x;
    for (int j = 1; j < degree; ++j) {
        P(j + 1) = ((2.0 * j + 1.0) * x * P(j) - j * P(j - 1)) / (j + 1.0);
    }
    return P;
}

Vector legendre_derivatives(int degree, double x) {
    // P'_{j+1} = P'_{j-1} + (2j+1) P_j
    const Vector P = legendre_values(degree, x);
    Vector dP = Vector::Zero(degree + 1);
    if (degree >= 1) dP(1) = 1.0;
    for (int j = 1; j < degree; ++j) dP(j + 1) = dP(j - 1) + (2.0 * j + 1.0) * P(j);
    return dP;
}

Vector basis_values(const BasisSpec& basis, double theta) {
    if (!basis.contains(theta)) {
        throw Error(ErrorKind::InvalidInput, "evaluation point " + std::to_string(theta) + " outside basis domain");
    }
    return legendre_values(basis.degree, basis.to_reference(theta));
}

Vector basis_derivatives(const BasisSpec& basis, double theta) {
    if (!basis.contains(theta)) {
        throw Error(ErrorKind::InvalidInput, "evaluation point " + std::to_string(theta) + " outside basis domain");
    }
    return (2.0 / basis.length()) * legendre_derivatives(basis.degree, basis.to_reference(theta));
}

Matrix scalar_derivative_matrix(const BasisSpec& basis) {
    // P'_j = sum over k < j with j - k odd of (2k + 1) P_k
    const int N = basis.degree;
    const double scale = 2.0 / basis.length();
    Matrix D = Matrix::Zero(N, N + 1);
    for (int j = 1; j <= N; ++j) {
        for (int k = j - 1; k >= 0; k -= 2) D(k, j) = scale * (2.0 * k + 1.0);
    }
    return D;
}

Matrix eval_functional(const BasisSpec& basis, double theta, Index n) {
    return kron_identity(basis_values(basis, theta).transpose(), n);
}

Matrix derivative_matrix(const BasisSpec& basis, Index n) {
    return kron_identity(scalar_derivative_matrix(basis), n);
}

Matrix truncation_matrix(const BasisSpec& basis, Index n) {
    const Index N = basis.degree;
    Matrix T = Matrix::Zero(n * N, n * (N + 1));
    T.leftCols(n * N).setIdentity();
    return T;
}

Matrix derivative_eval_functional(const BasisSpec& basis, double theta, Index n) {
    return kron_identity(basis_derivatives(basis, theta).transpose(), n);
}

}  // namespace tauh2

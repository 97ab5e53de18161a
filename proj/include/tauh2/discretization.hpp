#pragma once

#include <span>
#include <vector>

#include "tauh2/model.hpp"
#include "tauh2/orthopoly.hpp"
#include "tauh2/types.hpp"

namespace tauh2 {

enum class Mode { Polynomial, Spline };

const char* to_string(Mode mode);
/// Accepts "poly"/"polynomial" and "spline"; throws InvalidInput otherwise.
Mode parse_mode(const std::string& text);

/// Lanczos tau discretization  E_N x_N' = A_N x_N + B_N v,  z_N = C_N x_N.
///
/// Polynomial mode uses one Legendre basis on [-tau_m, 0] (on [-1, 0] for a
/// delay-free system). Spline mode uses one degree-N basis per segment
/// [-tau_k, -tau_{k-1}], segments stored consecutively; the rows are the n
/// input rows, then the tau rows segment by segment, then the m-1 knot
/// continuity rows.
struct TauDiscretization {
    Matrix E;
    Matrix A;
    Matrix B;
    Matrix C;
    Mode mode = Mode::Polynomial;
    int degree = 1;
    Index n = 0;
    std::vector<double> delays;
    std::vector<BasisSpec> bases;

    Index size() const { return E.rows(); }
};

/// Basis of the single-polynomial discretization for the given delays.
BasisSpec polynomial_basis(std::span<const double> delays, int degree);
/// Segment bases [-tau_k, -tau_{k-1}], k = 1..m.
std::vector<BasisSpec> spline_bases(std::span<const double> delays, int degree);

TauDiscretization discretize(const DdaeSystem& sys, int degree, Mode mode = Mode::Polynomial);

/// r_N(s, -tau_k) of the chosen discretization (k = 0 gives 1).
/// Throws PoleAtPoint when s is a pole of the rational function.
Complex rational_exp(std::span<const double> delays, int degree, Mode mode, Complex s, int k);

/// r_N(s, theta) for theta in [-tau_m, 0].
Complex rational_exp_at(std::span<const double> delays, int degree, Mode mode, Complex s, double theta);

/// C_N (s E_N - A_N)^{-1} B_N. Throws CharacteristicRoot when singular.
CMatrix discretized_transfer(const TauDiscretization& d, Complex s);

/// C (sE - sum_k A_k r_N(s, -tau_k))^{-1} B, the closed form of the same function.
CMatrix rational_transfer(const DdaeSystem& sys, int degree, Mode mode, Complex s);

}  // namespace tauh2

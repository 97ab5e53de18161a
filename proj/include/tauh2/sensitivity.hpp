#pragma once

#include <string>
#include <vector>

#include "tauh2/h2.hpp"
#include "tauh2/model.hpp"
#include "tauh2/reduction.hpp"

namespace tauh2 {

/// Adjoint quantities of the squared norm with respect to the discretization:
///   Q_U = Q (U_perp - A12 A22^{-1} U),   P_V = (V_perp - V A22^{-1} A21) P,
///   W   = V A22^{-1} U,
///   D_S = P_V E11^T Q_U - W B_N B^T Q_U - P_V C^T C_N W,
/// so that d||G_N||^2 = 2 tr(D_S dA_N) + 2 tr(B^T Q_U dB_N) + 2 tr(P_V C^T dC_N).
struct AdjointCache {
    Matrix Q_U;
    Matrix P_V;
    Matrix W;
    Matrix D_S;
};

AdjointCache adjoint_cache(const TauDiscretization& d, const ReducedOde& r, const H2Result& h);

/// Gradients of ||G_N||^2.
struct GradientBundle {
    double norm_squared = 0.0;
    std::vector<Matrix> dA;  // k = 0..m
    std::vector<double> dtau;  // tau_1..tau_m
    Matrix dB;
    Matrix dC;
    /// Chain rule through the affine bindings (empty without bindings).
    std::vector<double> dparams;
    H2Result h2;
};

/// Throws NoGradient when the reduced system is unstable or has a
/// feedthrough term, UnsupportedMode for spline discretizations.
GradientBundle gradient(const DdaeSystem& sys, int degree, Mode mode = Mode::Polynomial);
GradientBundle gradient(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings, int degree,
                        Mode mode = Mode::Polynomial);

/// dparams[j] = sum over targets of coefficient * matching entry (or dtau).
std::vector<double> chain_parameters(const GradientBundle& g, const std::vector<ParameterBinding>& bindings);

struct FdEntry {
    std::string name;
    double analytic = 0.0;
    double finite_difference = 0.0;
    double relative_error = 0.0;
};

struct FdReport {
    std::vector<FdEntry> entries;
    double max_relative_error = 0.0;
};

/// Central differences of ||G_N||^2 with step `step * |value|` (or `step` at zero) per
/// parameter against the analytic gradient. `subset` lists binding names;
/// empty means all.
FdReport fd_check(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings, int degree, double step,
                  const std::vector<std::string>& subset = {});

double relative_difference(double a, double b);

}  // namespace tauh2

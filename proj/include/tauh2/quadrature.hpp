#pragma once

#include <vector>

#include "tauh2/model.hpp"
#include "tauh2/parallel.hpp"
#include "tauh2/types.hpp"

namespace tauh2 {

/// A characteristic root in the closed right half-plane with the residue of
/// the transfer function there.
struct UnstableRoot {
    Complex lambda;
    CMatrix residue;  // q x p
};

/// Closed right half-plane characteristic roots, seeded from the eigenvalues
/// of a degree-`seed_degree` discretization and refined by Newton's method on
/// det(sE - sum A_k exp(-tau_k s)). Seeds that do not converge are dropped.
std::vector<UnstableRoot> unstable_roots(const DdaeSystem& sys, int seed_degree = 20);

/// Residue of G at a simple pole, by the trapezoidal rule on a small circle.
CMatrix transfer_residue(const DdaeSystem& sys, Complex lambda, double radius);

struct OracleOptions {
    double rel_tol = 1e-10;
    /// Integrate the reflected transfer function
    ///   G(s) - sum R_i / (s - lambda_i) + sum R_i / (s + conj(lambda_i))
    /// over the unstable roots; this is the limit of the pole-flipped
    /// discretization, and equals G when the system is stable.
    bool reflect_unstable = false;
    double panel_width = 1.0;
    double initial_cutoff = 64.0;
    double max_cutoff = 1u << 22;
    Exec exec = Exec::Parallel;
};

struct OracleResult {
    double norm = 0.0;
    double cutoff = 0.0;
    double tail = 0.0;
    std::vector<UnstableRoot> reflected;
};

/// sqrt((1/pi) int_0^inf ||G(i w)||_F^2 dw) by adaptive Gauss-Kronrod panels
/// on [0, W], W doubled until two successive tail-corrected totals agree to
/// rel_tol/10. The tail beyond W assumes ||G(iw)||^2 ~ c / w^2 with c averaged
/// over [W/2, W]. Throws OracleDivergence when w^2 ||G||^2 keeps growing
/// (a feedthrough signature) or the cutoff limit is reached.
OracleResult h2_quadrature(const DdaeSystem& sys, const OracleOptions& options = {});

/// Convenience form returning the norm only.
double h2_quadrature_oracle(const DdaeSystem& sys, double rel_tol = 1e-10);

}  // namespace tauh2

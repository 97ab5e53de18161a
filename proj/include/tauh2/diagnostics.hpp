#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tauh2/model.hpp"
#include "tauh2/parallel.hpp"
#include "tauh2/reduction.hpp"
#include "tauh2/types.hpp"

namespace tauh2 {

using MultiIndex = std::vector<int>;

/// Word sums P_k over the algebraic blocks A_{1,22} ... A_{m,22} for all
/// k in N^m with |k|_1 < order, generated by the first-letter recursion
///     P_0 = I,   P_k = sum_{j : k_j > 0} A_{j,22} P_{k - e_j}.
/// The undelayed block A_{0,22} = -I only contributes a sign and is left out.
struct PkFamily {
    Index nu = 0;
    int m = 0;
    /// Ordered by |k|_1, then descending lexicographically.
    std::vector<MultiIndex> indices;
    std::vector<Matrix> matrices;

    const Matrix* find(const MultiIndex& k) const;
};

/// Multi-indices in N^m with |k|_1 < bound, by total then descending
/// lexicographically: (0,0), (1,0), (0,1), (2,0), ...
std::vector<MultiIndex> multi_indices_below(int m, int bound);

PkFamily pk_family(const std::vector<Matrix>& A22, int order);

struct TorusSearch {
    /// Grid points per free dimension; 0 selects 64 for m <= 2, 24 otherwise.
    int grid = 0;
    int refinement_steps = 50;
    Exec exec = Exec::Parallel;
};

struct EssentialRadius {
    double rho = 0.0;
    /// Maximizing phases; theta_1 is fixed at 0 since a common phase does
    /// not change the spectral radius.
    std::vector<double> theta;
};

/// Spectral radius of sum_{k>=1} A_{k,22} exp(i theta_k).
double torus_radius(const std::vector<Matrix>& A22, const std::vector<double>& theta);

/// Maximum of torus_radius over [0, 2pi)^m: grid search followed by a
/// Nelder-Mead refinement around the best grid point.
EssentialRadius essential_radius(const StandardForm& sf, const TorusSearch& search = {});
EssentialRadius essential_radius(const std::vector<Matrix>& A22, const TorusSearch& search = {});

/// Max real part of the eigenvalues of (A, E11) of the degree-N reduction.
double nominal_abscissa(const DdaeSystem& sys, int degree);

struct FeedthroughTest {
    bool pass = true;
    MultiIndex first_violation;
    double violation_norm = 0.0;
    double tolerance = 0.0;
    std::size_t tested = 0;
};

inline constexpr double kPkRelativeTolerance = 1e-10;

/// Tests C2 P_k B2 = 0 for all |k|_1 < nu.
FeedthroughTest feedthrough_family_test(const StandardForm& sf);

enum class Verdict { Finite, Infinite, Indeterminate };
const char* to_string(Verdict v);

struct DiagnosticsReport {
    bool index_ok = false;
    IndexVerdict index;
    bool rank_ambiguous = false;

    bool essential_ok = false;
    EssentialRadius essential;
    bool nominal_ok = false;
    double abscissa = 0.0;
    int abscissa_degree = 0;
    bool strongly_stable = false;

    bool feedthrough_free = false;
    FeedthroughTest feedthrough;

    Verdict verdict = Verdict::Indeterminate;
    std::vector<std::string> notes;

    /// Only the nominal abscissa failed: the pole-flipped norm is still defined.
    bool only_nominally_unstable() const {
        return index_ok && essential_ok && feedthrough_free && !nominal_ok;
    }
};

struct DiagnosticsOptions {
    int degree = 40;
    TorusSearch torus;
};

/// Index check, essential radius, nominal abscissa and the P_k test, in that
/// order, stopping at the first failure.
DiagnosticsReport run_diagnostics(const DdaeSystem& sys, const DiagnosticsOptions& options = {});

std::string format_multi_index(const MultiIndex& k);

}  // namespace tauh2

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tauh2/discretization.hpp"
#include "tauh2/model.hpp"
#include "tauh2/parallel.hpp"

namespace tauh2 {

struct ConvergenceRow {
    int degree = 0;
    double h2 = 0.0;
    double abs_error = 0.0;
    Mode mode = Mode::Polynomial;
    int flipped = 0;
    /// Empty unless the norm evaluation failed at this degree (h2 is NaN then).
    std::string failure;
};

/// Least-squares line through (x_i, log10 e_i).
struct RateFit {
    bool valid = false;
    double slope = 0.0;
    double intercept = 0.0;
    double correlation = 0.0;
    int points = 0;
    int first_degree = 0;
    int last_degree = 0;

    /// Algebraic order: minus the log-log slope.
    double order() const { return -slope; }
};

enum class ReferenceKind { Oracle, HighDegree, Given };

struct ReferenceSpec {
    ReferenceKind kind = ReferenceKind::Oracle;
    double value = 0.0;        // used by Given
    double oracle_tol = 1e-11;  // used by Oracle
    int high_degree = 80;       // used by HighDegree
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    double reference = 0.0;
    ReferenceKind reference_kind = ReferenceKind::Oracle;
    /// Absolute accuracy attributed to the reference; errors below ten times
    /// this are left out of the fits.
    double reference_uncertainty = 0.0;
    RateFit algebraic;  // log10 error against log10 N
    RateFit geometric;  // log10 error against N
};

/// Fit window: N >= 8 and error above max(100 eps, `floor`); the largest such
/// contiguous run of degrees is used.
RateFit fit_algebraic(const std::vector<ConvergenceRow>& rows, double floor);
/// Geometric fit over all rows whose error exceeds `floor`, stopping at the
/// first row that does not.
RateFit fit_geometric(const std::vector<ConvergenceRow>& rows, double floor);

/// Norm at each degree. Unstable discretizations are pole-flipped when
/// `allow_flip` is set. The rows come back ordered as `degrees` under either
/// execution policy, with identical values.
std::vector<ConvergenceRow> norm_sweep(const DdaeSystem& sys, const std::vector<int>& degrees, Mode mode,
                                       bool allow_flip = true, Exec exec = Exec::Parallel);

/// Value used as ground truth. The oracle integrates the reflected transfer
/// function so that it matches pole-flipped discretizations.
double convergence_reference(const DdaeSystem& sys, Mode mode, const ReferenceSpec& spec,
                             double* uncertainty = nullptr);

ConvergenceStudy convergence_study(const DdaeSystem& sys, const std::vector<int>& degrees, Mode mode,
                                   const ReferenceSpec& reference = {}, bool allow_flip = true,
                                   Exec exec = Exec::Parallel);

/// CSV with header `N,h2,abs_error,mode`, 17 significant digits.
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);

/// Parses "a:b:c" (start:step:stop, inclusive) or a comma list.
std::vector<int> parse_degree_range(const std::string& text);

}  // namespace tauh2

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tauh2/h2.hpp"
#include "tauh2/model.hpp"

namespace tauh2 {

/// Outcome of one objective evaluation.
struct Evaluation {
    double value = 0.0;  // ||G_N||^2, or +inf when infeasible
    std::string reason;  // why the point is infeasible (empty when finite)
    bool finite() const;
};

/// ||G_N||^2 at `values` (one per binding), or +inf when the delays are out of
/// order, a bound is violated, the index exceeds one, the strong stability or
/// feedthrough test fails, or the reduced ODE is unstable.
Evaluation objective(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings,
                     const std::vector<double>& values, int degree = 40);

struct SynthesisConfig {
    int degree = 40;
    int max_iters = 200;
    /// Stop when the largest gradient component falls below this.
    double grad_tol = 1e-6;
    // Line search constants; 0 < delta < sigma < 1.
    double delta = 0.1;
    double sigma = 0.9;
    /// Approximate Wolfe slack, relative to |f(x_k)|.
    double epsilon = 1e-6;
    double theta = 0.5;
    double gamma = 0.66;
    double expansion = 5.0;
    int max_line_evals = 50;
    /// Names of the bindings to optimize; empty uses all of them.
    std::vector<std::string> free;
};

enum class SynthesisVerdict { Converged, MaxIters, LineSearchFailure };
const char* to_string(SynthesisVerdict v);

/// One objective evaluation during the run.
struct TraceRow {
    int iter = 0;
    double fval = 0.0;
    double gnorm = 0.0;  // NaN when no gradient was computed
    double step = 0.0;
    bool accepted = false;
    std::vector<double> params;  // free parameters at this point
};

struct SynthesisTrace {
    std::vector<TraceRow> rows;
    SynthesisVerdict verdict = SynthesisVerdict::MaxIters;
    std::string message;
    int iterations = 0;
};

struct SynthesisResult {
    std::vector<std::string> names;  // free parameters
    std::vector<double> optimum;     // free parameter values at the best point
    std::vector<double> all_values;  // every binding at the best point
    DdaeSystem system;               // system at the best point
    H2Result h2;
    SynthesisTrace trace;
};

/// BFGS on the free parameters with a Hager-Zhang line search. The start is
/// taken from the binding values. Throws InvalidInput for an unknown free
/// name or an infeasible start.
SynthesisResult synthesize(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings,
                           const SynthesisConfig& config = {});

/// CSV with header `iter,fval,gnorm,step,accepted`.
void write_trace_csv(std::ostream& out, const SynthesisTrace& trace);

}  // namespace tauh2

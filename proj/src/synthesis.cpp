#include "tauh2/synthesis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>

#include "tauh2/diagnostics.hpp"
#include "tauh2/error.hpp"
#include "tauh2/reduction.hpp"
#include "tauh2/sensitivity.hpp"

namespace tauh2 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Builds the system at `values` and runs the checks that do not need the
/// discretization. Returns the reason for infeasibility, or empty.
std::string screen(const DdaeSystem& base, const std::vector<ParameterBinding>& bindings,
                   const std::vector<double>& values, DdaeSystem& out) {
    for (std::size_t j = 0; j < bindings.size(); ++j) {
        if (!std::isfinite(values[j])) return "parameter '" + bindings[j].name + "' is not finite";
        if (!bindings[j].within_bounds(values[j])) return "parameter '" + bindings[j].name + "' out of bounds";
    }
    try {
        out = apply_parameters(base, bindings, values);
    } catch (const Error& e) {
        return e.what();
    }
    if (!index_check(out).index_at_most_one) return "index exceeds one";
    try {
        const StandardForm sf = standard_form(out);
        if (sf.nu > 0 && out.m() > 0) {
            const EssentialRadius er = essential_radius(sf);
            if (er.rho >= 1.0) return "not strongly stable (essential radius " + std::to_string(er.rho) + ")";
        }
        if (!feedthrough_family_test(sf).pass) return "feedthrough under delay perturbation";
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

struct Sample {
    double alpha = 0.0;
    double f = kInf;
    double dphi = std::numeric_limits<double>::quiet_NaN();
    Vector x;
    Vector g;
    bool finite() const { return std::isfinite(f); }
};

/// Objective and gradient restricted to the free parameters.
class Problem {
public:
    Problem(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings, std::vector<std::size_t> free,
            int degree)
        : sys_(sys), bindings_(bindings), free_(std::move(free)), degree_(degree) {
        for (const auto& b : bindings_) base_values_.push_back(b.value);
    }

    std::vector<double> full(const Vector& x) const {
        std::vector<double> v = base_values_;
        for (std::size_t i = 0; i < free_.size(); ++i) v[free_[i]] = x(static_cast<Index>(i));
        return v;
    }

    /// f = +inf (and g empty) when infeasible or when the gradient is undefined.
    void evaluate(const Vector& x, double& f, Vector& g, std::string* reason = nullptr) const {
        f = kInf;
        g.resize(0);
        DdaeSystem at;
        const std::string why = screen(sys_, bindings_, full(x), at);
        if (!why.empty()) {
            if (reason) *reason = why;
            return;
        }
        try {
            const GradientBundle gb = gradient(at, degree_);
            const std::vector<double> dp = chain_parameters(gb, bindings_);
            f = gb.norm_squared;
            g.resize(static_cast<Index>(free_.size()));
            for (std::size_t i = 0; i < free_.size(); ++i) g(static_cast<Index>(i)) = dp[free_[i]];
        } catch (const Error& e) {
            if (reason) *reason = e.what();
            f = kInf;
            g.resize(0);
        }
    }

private:
    const DdaeSystem& sys_;
    const std::vector<ParameterBinding>& bindings_;
    std::vector<std::size_t> free_;
    int degree_;
    std::vector<double> base_values_;
};

/// Hager-Zhang line search along d from (x0, f0, g0).
class LineSearch {
public:
    LineSearch(const Problem& problem, const SynthesisConfig& cfg, const Vector& x0, double f0, const Vector& g0,
               const Vector& d, int iter, SynthesisTrace& trace)
        : problem_(problem), cfg_(cfg), x0_(x0), d_(d), iter_(iter), trace_(trace) {
        origin_.alpha = 0.0;
        origin_.f = f0;
        origin_.x = x0;
        origin_.g = g0;
        origin_.dphi = g0.dot(d);
        eps_ = cfg.epsilon * std::abs(f0);
        best_ = origin_;
    }

    std::optional<Sample> run(double alpha0) {
        Sample c = sample(alpha0);
        if (done_) return found_;

        // Bracketing phase: expand until the slope turns or the value rises.
        Sample a = origin_, b;
        Sample last_good = origin_;
        for (;;) {
            if (!c.finite() || c.dphi >= 0.0) {
                a = last_good;
                b = c;
                break;
            }
            if (c.f > origin_.f + eps_) {
                a = origin_;
                b = c;
                shrink(a, b);
                break;
            }
            last_good = c;
            c = sample(cfg_.expansion * c.alpha);
            if (done_) return found_;
        }
        if (done_) return found_;

        while (!exhausted()) {
            const double width = b.alpha - a.alpha;
            Sample A = a, B = b;
            secant2(A, B);
            if (done_) return found_;
            if (B.alpha - A.alpha > cfg_.gamma * width) {
                const Sample m = sample(0.5 * (A.alpha + B.alpha));
                if (done_) return found_;
                update(A, B, m);
                if (done_) return found_;
            }
            a = A;
            b = B;
            if (b.alpha - a.alpha <= 1e-14 * std::max(1.0, b.alpha)) break;
        }
        return std::nullopt;
    }

    const Sample& best() const { return best_; }

private:
    bool exhausted() const { return evals_ >= cfg_.max_line_evals; }

    bool wolfe(const Sample& c) const {
        if (!c.finite() || !(c.f < origin_.f)) return false;
        const double d0 = origin_.dphi;
        const bool curvature = c.dphi >= cfg_.sigma * d0;
        const bool armijo = c.f <= origin_.f + cfg_.delta * c.alpha * d0;
        const bool approximate = (2.0 * cfg_.delta - 1.0) * d0 >= c.dphi && c.f <= origin_.f + eps_;
        return curvature && (armijo || approximate);
    }

    Sample sample(double alpha) {
        Sample s;
        s.alpha = alpha;
        if (exhausted()) {
            done_ = true;
            return s;
        }
        ++evals_;
        s.x = x0_ + alpha * d_;
        problem_.evaluate(s.x, s.f, s.g);
        if (s.finite()) s.dphi = s.g.dot(d_);
        TraceRow row;
        row.iter = iter_;
        row.fval = s.f;
        row.gnorm = s.finite() ? s.g.lpNorm<Eigen::Infinity>() : std::numeric_limits<double>::quiet_NaN();
        row.step = alpha * d_.norm();
        row.params.assign(s.x.data(), s.x.data() + s.x.size());
        trace_.rows.push_back(std::move(row));
        if (s.finite() && s.f < best_.f) best_ = s;
        if (wolfe(s)) {
            found_ = s;
            done_ = true;
        } else if (exhausted()) {
            done_ = true;
        }
        return s;
    }

    /// Bisection towards a point with nonnegative slope, or low value and
    /// negative slope; infeasible points count as high.
    void shrink(Sample& a, Sample& b) {
        while (!done_) {
            const Sample dd = sample((1.0 - cfg_.theta) * a.alpha + cfg_.theta * b.alpha);
            if (done_) return;
            if (dd.finite() && dd.dphi >= 0.0) {
                b = dd;
                return;
            }
            if (dd.finite() && dd.f <= origin_.f + eps_) {
                a = dd;
            } else {
                b = dd;
            }
            if (b.alpha - a.alpha <= 1e-14 * std::max(1.0, b.alpha)) return;
        }
    }

    void update(Sample& a, Sample& b, const Sample& c) {
        if (!(c.alpha > a.alpha && c.alpha < b.alpha)) return;
        if (!c.finite() || c.dphi >= 0.0) {
            b = c;
            return;
        }
        if (c.f <= origin_.f + eps_) {
            a = c;
            return;
        }
        b = c;
        shrink(a, b);
    }

    static double secant(const Sample& a, const Sample& b) {
        if (!a.finite() || !b.finite() || !(b.dphi != a.dphi)) return 0.5 * (a.alpha + b.alpha);
        return (a.alpha * b.dphi - b.alpha * a.dphi) / (b.dphi - a.dphi);
    }

    void secant2(Sample& A, Sample& B) {
        const Sample a = A, b = B;
        const Sample c = sample(secant(a, b));
        if (done_) return;
        update(A, B, c);
        if (done_) return;
        std::optional<double> cbar;
        if (c.alpha == B.alpha) cbar = secant(b, B);
        if (c.alpha == A.alpha) cbar = secant(a, A);
        if (cbar) {
            const Sample cc = sample(*cbar);
            if (done_) return;
            update(A, B, cc);
        }
    }

    const Problem& problem_;
    const SynthesisConfig& cfg_;
    Vector x0_, d_;
    int iter_;
    SynthesisTrace& trace_;
    Sample origin_, best_;
    double eps_ = 0.0;
    int evals_ = 0;
    bool done_ = false;
    std::optional<Sample> found_;
};

constexpr int kMaxRestarts = 20;
/// Distance to a bound, relative to max(1, |x|), below which it is active.
constexpr double kActiveBound = 1e-6;

void mark_accepted(SynthesisTrace& trace, int iter, double f) {
    for (auto it = trace.rows.rbegin(); it != trace.rows.rend() && it->iter == iter; ++it) {
        if (it->fval == f) {
            it->accepted = true;
            return;
        }
    }
}

}  // namespace

bool Evaluation::finite() const { return std::isfinite(value); }

Evaluation objective(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings,
                     const std::vector<double>& values, int degree) {
    Evaluation ev;
    if (values.size() != bindings.size()) throw Error(ErrorKind::InvalidInput, "one value per binding expected");
    DdaeSystem at;
    ev.reason = screen(sys, bindings, values, at);
    if (!ev.reason.empty()) {
        ev.value = kInf;
        return ev;
    }
    try {
        ev.value = h2_norm(at, degree, Mode::Polynomial, false).norm_squared;
    } catch (const Error& e) {
        ev.value = kInf;
        ev.reason = e.what();
    }
    return ev;
}

const char* to_string(SynthesisVerdict v) {
    switch (v) {
        case SynthesisVerdict::Converged: return "converged";
        case SynthesisVerdict::MaxIters: return "max-iters";
        case SynthesisVerdict::LineSearchFailure: return "line-search-failure";
    }
    return "unknown";
}

SynthesisResult synthesize(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings,
                           const SynthesisConfig& cfg) {
    if (!(0.0 < cfg.delta && cfg.delta < cfg.sigma && cfg.sigma < 1.0)) {
        throw Error(ErrorKind::InvalidInput, "line search constants must satisfy 0 < delta < sigma < 1");
    }
    check_bindings(sys, bindings);
    std::vector<std::size_t> free;
    SynthesisResult res;
    if (cfg.free.empty()) {
        for (std::size_t j = 0; j < bindings.size(); ++j) free.push_back(j);
    } else {
        for (const auto& name : cfg.free) {
            const auto j = find_binding(bindings, name);
            if (!j) throw Error(ErrorKind::InvalidInput, "unknown parameter '" + name + "'");
            free.push_back(*j);
        }
    }
    if (free.empty()) throw Error(ErrorKind::InvalidInput, "no free parameters");
    for (std::size_t j : free) res.names.push_back(bindings[j].name);

    const Problem problem(sys, bindings, free, cfg.degree);
    const auto n = static_cast<Index>(free.size());
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = bindings[free[static_cast<std::size_t>(i)]].value;

    double f = 0.0;
    Vector g;
    std::string reason;
    problem.evaluate(x, f, g, &reason);
    if (!std::isfinite(f)) throw Error(ErrorKind::InvalidInput, "infeasible start: " + reason);

    auto& trace = res.trace;
    trace.rows.push_back(TraceRow{0, f, g.lpNorm<Eigen::Infinity>(), 0.0, true,
                                  std::vector<double>(x.data(), x.data() + n)});

    auto reset_H = [&](const Vector& grad) {
        const double gn = grad.norm();
        return Matrix(Matrix::Identity(n, n) / (gn > 0.0 ? gn : 1.0));
    };
    Matrix H = reset_H(g);
    trace.verdict = SynthesisVerdict::MaxIters;
    int iter = 0;
    int restarts = 0;
    for (; iter < cfg.max_iters; ++iter) {
        // Parameters pressed against a bound are left out of the direction;
        // the barrier alone would pin the iterate to the wall.
        Vector pg = g;
        bool any_blocked = false;
        for (Index i = 0; i < n; ++i) {
            const auto& b = bindings[free[static_cast<std::size_t>(i)]];
            if (!b.bounds) continue;
            const double tol = kActiveBound * std::max(1.0, std::abs(x(i)));
            if ((x(i) - b.bounds->first <= tol && g(i) > 0.0) || (b.bounds->second - x(i) <= tol && g(i) < 0.0)) {
                pg(i) = 0.0;
                any_blocked = true;
            }
        }
        if (pg.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
            trace.verdict = SynthesisVerdict::Converged;
            trace.message = any_blocked ? "projected gradient below tolerance at a bound" : "gradient below tolerance";
            break;
        }
        Vector d = -H * pg;
        if (any_blocked) {
            for (Index i = 0; i < n; ++i) {
                if (pg(i) == 0.0 && g(i) != 0.0) d(i) = 0.0;
            }
        }
        if (!(g.dot(d) < 0.0)) {
            H = reset_H(pg);
            d = -H * pg;
        }
        LineSearch ls(problem, cfg, x, f, g, d, iter + 1, trace);
        std::optional<Sample> step = ls.run(1.0);
        if (!step) {
            // No Wolfe point, typically because the barrier cuts the search
            // short. Take the best strict improvement and restart the
            // curvature model; give up when there is none.
            const Sample& b = ls.best();
            if (b.finite() && b.f < f && b.alpha > 0.0 && ++restarts <= kMaxRestarts) {
                mark_accepted(trace, iter + 1, b.f);
                x = b.x;
                f = b.f;
                g = b.g;
                H = reset_H(g);
                continue;
            }
            trace.verdict = SynthesisVerdict::LineSearchFailure;
            trace.message = "no acceptable step within the evaluation budget";
            ++iter;
            break;
        }
        restarts = 0;
        trace.rows.back().accepted = true;  // the search stops at its Wolfe point
        const Vector s = step->x - x;
        const Vector y = step->g - g;
        x = step->x;
        f = step->f;
        g = step->g;
        const double ys = y.dot(s);
        if (ys > 1e-10 * y.norm() * s.norm()) {
            const double rho = 1.0 / ys;
            const Matrix V = Matrix::Identity(n, n) - rho * y * s.transpose();
            H = V.transpose() * H * V + rho * s * s.transpose();
        }
    }
    trace.iterations = iter;
    if (trace.verdict == SynthesisVerdict::MaxIters && trace.message.empty()) trace.message = "iteration limit reached";

    res.optimum.assign(x.data(), x.data() + n);
    res.all_values = problem.full(x);
    res.system = apply_parameters(sys, bindings, res.all_values);
    res.h2 = h2_norm(res.system, cfg.degree, Mode::Polynomial, false);
    return res;
}

void write_trace_csv(std::ostream& out, const SynthesisTrace& trace) {
    out << "iter,fval,gnorm,step,accepted\n";
    char buf[160];
    for (const auto& r : trace.rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d\n", r.iter, r.fval, r.gnorm, r.step,
                      r.accepted ? 1 : 0);
        out << buf;
    }
}

}  // namespace tauh2

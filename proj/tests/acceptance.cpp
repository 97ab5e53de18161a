// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tauh2/convergence.hpp"
#include "tauh2/diagnostics.hpp"
#include "tauh2/discretization.hpp"
#include "tauh2/error.hpp"
#include "tauh2/h2.hpp"
#include "tauh2/lyapunov.hpp"
#include "tauh2/quadrature.hpp"
#include "tauh2/reduction.hpp"
#include "tauh2/sensitivity.hpp"
#include "tauh2/synthesis.hpp"

using namespace tauh2;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.str().empty()) detail << "; ";
        detail << (ok ? "" : "!") << what;
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

Example example(ExampleTag tag) { return build_example(ExampleId{tag}); }

DdaeSystem conv(std::array<int, 4> delta) {
    ExampleId id{ExampleTag::ConvSys};
    id.delta = delta;
    return build_example(id).system;
}

double value_of(const SynthesisResult& r, const std::string& name) {
    for (std::size_t i = 0; i < r.names.size(); ++i)
        if (r.names[i] == name) return r.optimum[i];
    return std::nan("");
}

SynthesisResult synth(const Example& ex, std::vector<std::string> free = {}) {
    SynthesisConfig cfg;
    cfg.free = free.empty() ? ex.default_free : std::move(free);
    return synthesize(ex.system, ex.bindings, cfg);
}

DdaeSystem scalar(double a0, std::vector<std::pair<double, double>> delayed) {
    DdaeSystem s;
    s.E = Matrix::Ones(1, 1);
    s.A = {Matrix::Constant(1, 1, a0)};
    for (auto [a, tau] : delayed) {
        s.A.push_back(Matrix::Constant(1, 1, a));
        s.delays.push_back(tau);
    }
    s.B = Matrix::Ones(1, 1);
    s.C = Matrix::Ones(1, 1);
    return s;
}

void c1(Outcome& o) {
    const Example ex = example(ExampleTag::Rdde1);
    const double start = h2_norm(ex.system, 40).norm;
    o.require(within(start, 8.91, 0.05), "start " + fmt("%.4f", start));
    const SynthesisResult r = synth(ex);
    o.require(within(r.h2.norm, 5.70, 0.05), "final " + fmt("%.4f", r.h2.norm));
    const double target[] = {0.538, 0.338, 0.226};
    const char* names[] = {"p1", "p2", "p3"};
    for (int i = 0; i < 3; ++i) {
        const double v = value_of(r, names[i]);
        o.require(within(v, target[i], 0.01), std::string(names[i]) + "=" + fmt("%.4f", v));
    }
}

void c2(Outcome& o) {
    const Example ex = example(ExampleTag::Rdde2);
    const double start = h2_norm(ex.system, 40).norm;
    o.require(within(start, 0.465, 0.005), "start " + fmt("%.4f", start));
    const SynthesisResult r = synth(ex, {"tau", "k_r"});
    o.require(within(r.h2.norm, 0.223, 0.005), "final " + fmt("%.4f", r.h2.norm));
    o.require(within(value_of(r, "tau"), 0.0519, 0.001), "tau=" + fmt("%.5f", value_of(r, "tau")));
    o.require(within(value_of(r, "k_r"), 17.964, 0.05), "k_r=" + fmt("%.4f", value_of(r, "k_r")));
}

void c3(Outcome& o) {
    const Example ex = example(ExampleTag::Rdde3);
    const SynthesisResult r = synth(ex);
    o.require(r.h2.norm <= 7e-3, "final " + fmt("%.4e", r.h2.norm) + " <= 7e-3");
    o.require(within(r.h2.norm, 5.91e-3, 0.1 * 5.91e-3), "within 10% of 5.91e-3");
}

void c4(Outcome& o) {
    const Example ex = example(ExampleTag::Ndde1);
    const double start = h2_norm(ex.system, 40).norm;
    o.require(within(start, 0.71, 0.01), "start " + fmt("%.4f", start));
    const SynthesisResult r = synth(ex);
    o.require(r.h2.norm <= 0.67, "final " + fmt("%.4f", r.h2.norm));
    o.require(within(value_of(r, "p1"), -0.27, 0.03), "p1=" + fmt("%.4f", value_of(r, "p1")));
    o.require(within(value_of(r, "p2"), -1.50, 0.03), "p2=" + fmt("%.4f", value_of(r, "p2")));
}

void c5(Outcome& o) {
    const Example ex = example(ExampleTag::Ndde2);
    const double start = h2_norm(ex.system, 40).norm;
    o.require(within(start, 3.23, 0.03), "start " + fmt("%.4f", start));
    const SynthesisResult a = synth(ex, {"p2"});
    o.require(within(a.h2.norm, 0.57, 0.01), "p2-only " + fmt("%.4f", a.h2.norm));
    o.require(within(value_of(a, "p2"), -0.33, 0.01), "p2*=" + fmt("%.4f", value_of(a, "p2")));
    const SynthesisResult b = synth(ex, {"p2", "tau1"});
    o.require(within(b.h2.norm, 0.53, 0.01), "(p2,tau1) " + fmt("%.4f", b.h2.norm));
    // "At the bound": within 1e-3 of 0.1 (the barrier keeps it strictly above).
    o.require(within(value_of(b, "tau1"), 0.1, 1e-3), "tau1**=" + fmt("%.6f", value_of(b, "tau1")));
}

std::string tag(std::array<int, 4> d) {
    return "(" + std::to_string(d[0]) + std::to_string(d[1]) + std::to_string(d[2]) + std::to_string(d[3]) + ")";
}

// Oracle tolerances: 1e-11 where errors reach ~1e-8 at N = 60; 1e-8 for the
// first-order and neutral configurations, whose errors stay above 1e-6.
ConvergenceStudy study(std::array<int, 4> d, Mode mode, ReferenceKind kind, double tol, const char* degrees) {
    ReferenceSpec ref;
    ref.kind = kind;
    ref.oracle_tol = tol;
    return convergence_study(conv(d), parse_degree_range(degrees), mode, ref);
}

void c6(Outcome& o) {
    struct Alg {
        std::array<int, 4> d;
        double order;
        double tol;
    };
    for (const Alg& a : {Alg{{1, 1, 0, 0}, 3.0, 1e-11}, Alg{{1, 0, 0, 1}, 3.0, 1e-8}, Alg{{0, 0, 1, 1}, 1.0, 1e-8},
                         Alg{{0, 1, 1, 0}, 1.0, 1e-8}}) {
        const ConvergenceStudy s = study(a.d, Mode::Polynomial, ReferenceKind::Oracle, a.tol, "8:2:60");
        o.require(s.algebraic.valid && within(s.algebraic.order(), a.order, 0.5),
                  tag(a.d) + " order " + fmt("%.3f", s.algebraic.order()));
    }
    // Super-geometric decay reaches the floor by N = 13, so unit steps are
    // needed to get more than three points.
    for (std::array<int, 4> d : {std::array<int, 4>{1, 0, 0, 0}, {0, 0, 1, 0}}) {
        const ConvergenceStudy s = study(d, Mode::Polynomial, ReferenceKind::HighDegree, 0.0, "8:1:60");
        o.require(s.geometric.valid && s.geometric.points >= 3 && -s.geometric.correlation > 0.99,
                  tag(d) + " lin-log r=" + fmt("%.5f", s.geometric.correlation) + " over N=" +
                      std::to_string(s.geometric.first_degree) + ".." + std::to_string(s.geometric.last_degree));
    }
}

void c7(Outcome& o) {
    const ConvergenceStudy a = study({0, 1, 1, 0}, Mode::Spline, ReferenceKind::Oracle, 1e-8, "8:2:60");
    o.require(a.algebraic.valid && within(a.algebraic.order(), 3.0, 0.7), "(0110) spline order " + fmt("%.3f", a.algebraic.order()));
    const ConvergenceStudy b = study({1, 1, 0, 0}, Mode::Spline, ReferenceKind::Oracle, 1e-11, "8:2:60");
    o.require(b.algebraic.valid && b.algebraic.order() >= 4.3, "(1100) spline order " + fmt("%.3f", b.algebraic.order()));
}

void c8(Outcome& o) {
    struct Case {
        ExampleTag tag;
        std::vector<std::string> params;
    };
    const std::vector<Case> cases{{ExampleTag::Rdde1, {}}, {ExampleTag::Rdde2, {"tau", "k_r"}}, {ExampleTag::Rdde3, {}},
                                  {ExampleTag::Ndde1, {}}, {ExampleTag::Ndde2, {"p2", "tau1"}}};
    double worst = 0.0;
    double min_ratio = 1e300, max_ratio = 0.0;
    int vacuous = 0;
    for (const Case& c : cases) {
        const Example ex = example(c.tag);
        const auto params = c.params.empty() ? ex.default_free : c.params;
        const FdReport acc = fd_check(ex.system, ex.bindings, 40, 1e-5, params);
        const FdReport big = fd_check(ex.system, ex.bindings, 40, 3e-3, params);
        const FdReport small = fd_check(ex.system, ex.bindings, 40, 3e-4, params);
        for (std::size_t i = 0; i < acc.entries.size(); ++i) {
            worst = std::max(worst, acc.entries[i].relative_error);
            if (!(acc.entries[i].relative_error < 1e-5))
                o.require(false, ex.tag + "." + acc.entries[i].name + " rel " + fmt("%.2e", acc.entries[i].relative_error));
            // FD is exact for quadratic dependence (entries of B and C): the
            // error is roundoff at both steps and carries no order.
            if (big.entries[i].relative_error < 1e-9) {
                ++vacuous;
                continue;
            }
            const double ratio = big.entries[i].relative_error / small.entries[i].relative_error;
            min_ratio = std::min(min_ratio, ratio);
            max_ratio = std::max(max_ratio, ratio);
            if (!(ratio > 30.0 && ratio < 300.0)) o.require(false, ex.tag + "." + big.entries[i].name + " ratio " + fmt("%.1f", ratio));
        }
    }
    o.require(true, "max rel " + fmt("%.2e", worst) + " at h=1e-5");
    o.require(true, "err(3e-3)/err(3e-4) in [" + fmt("%.1f", min_ratio) + ", " + fmt("%.1f", max_ratio) + "], " +
                        std::to_string(vacuous) + " exact-FD entries");
}

void c9(Outcome& o) {
    const DdaeSystem s = scalar(-2.0, {{-1.0, 1.0}});
    const double oracle = h2_quadrature_oracle(s, 1e-12);
    const double gn = h2_norm(s, 40).norm;
    o.require(std::abs(gn - oracle) < 1e-8, "DDE |G40 - oracle| = " + fmt("%.2e", std::abs(gn - oracle)));
    const DdaeSystem ode = scalar(-1.0, {});
    const double r = std::sqrt(0.5);
    const double a = h2_norm(ode, 40).norm;
    const double b = h2_quadrature_oracle(ode, 1e-12);
    o.require(std::abs(a - r) < 1e-10 && std::abs(b - r) < 1e-10,
              "ODE errors " + fmt("%.1e", std::abs(a - r)) + ", " + fmt("%.1e", std::abs(b - r)));
}

std::vector<DdaeSystem> corpus() {
    std::vector<DdaeSystem> out;
    for (const auto& t : example_tags()) {
        const ExampleTag tagv = parse_example_tag(t);
        if (tagv == ExampleTag::ConvSys) {
            for (int bits = 0; bits < 16; ++bits) out.push_back(conv({bits >> 3 & 1, bits >> 2 & 1, bits >> 1 & 1, bits & 1}));
        } else {
            out.push_back(example(tagv).system);
        }
    }
    return out;
}

void c10(Outcome& o) {
    double worst = 0.0;
    int tested = 0;
    for (const DdaeSystem& s : corpus()) {
        const DiagnosticsReport rep = run_diagnostics(s);
        // conv-sys fails only the nominal abscissa; its reduction is the same
        // object, so it is held to the same bound.
        if (rep.verdict != Verdict::Finite && !rep.only_nominally_unstable()) continue;
        for (int N : {10, 20, 40}) {
            const ReducedOde r = split_and_reduce(discretize(s, N));
            worst = std::max(worst, r.D.norm());
            ++tested;
        }
    }
    o.require(worst < 1e-10, "max ||D|| = " + fmt("%.2e", worst) + " over " + std::to_string(tested) + " reductions");
    int failing = 0, triples = 0;
    for (std::array<double, 3> t : {std::array<double, 3>{1, 2, 3}, {0.5, 1.5, 2}, {0.3, 0.7, 1.0}, {1, 2, 2.5},
                                    {2, 1, 3}, {1.5, 0.5, 2.5}, {0.4, 1.3, 0.9}}) {
        ExampleId id{ExampleTag::IntroFeedthrough};
        id.intro_delays = t;
        ++triples;
        if (!feedthrough_family_test(standard_form(build_example(id).system)).pass) ++failing;
    }
    o.require(failing == triples, "intro-feedthrough P_k test fails for " + std::to_string(failing) + "/" +
                                      std::to_string(triples) + " triples");
}

void c11(Outcome& o) {
    // Primal/dual agreement and Lyapunov residuals on the corpus.
    double worst_gap = 0.0, worst_res = 0.0;
    for (ExampleTag t : {ExampleTag::Rdde1, ExampleTag::Rdde2, ExampleTag::Rdde3, ExampleTag::Ndde1, ExampleTag::Ndde2}) {
        for (int N : {10, 20, 40}) {
            const ReducedOde r = split_and_reduce(discretize(example(t).system, N));
            const H2Result h = h2_norm(r);
            worst_gap = std::max(worst_gap, std::abs(h.primal_trace - h.dual_trace) / h.primal_trace);
            const Matrix BB = r.B * r.B.transpose();
            const double res = lyapunov_residual(r.A, r.E11, BB, h.P, LyapunovSide::Primal);
            worst_res = std::max(worst_res, res / (r.A.norm() * h.P.norm() * r.E11.norm()));
        }
    }
    o.require(worst_gap < 1e-8, "primal/dual " + fmt("%.1e", worst_gap));
    o.require(worst_res < 1e-8, "scaled Lyapunov residual " + fmt("%.1e", worst_res));

    // Finite pencil spectrum kept by the Schur reduction: forward to 1e-8
    // where the eigenvector matrix is well conditioned, backward error for
    // every corpus system.
    double worst_eig = 0.0, worst_bw = 0.0;
    const std::pair<ExampleTag, int> forward[] = {{ExampleTag::Rdde1, 6}, {ExampleTag::Rdde1, 10}, {ExampleTag::Rdde3, 10}, {ExampleTag::Rdde2, 6}};
    for (auto [t, N] : forward) {
        const TauDiscretization d = discretize(example(t).system, N);
        const ReducedOde r = split_and_reduce(d);
        Eigen::GeneralizedEigenSolver<Matrix> ges(d.A, d.E);
        const CVector red = Eigen::EigenSolver<Matrix>(r.E11.lu().solve(r.A)).eigenvalues();
        std::vector<Complex> fin;
        for (Index i = 0; i < ges.alphas().size(); ++i)
            if (std::abs(ges.betas()(i)) > 1e-8 * std::abs(ges.alphas()(i))) fin.push_back(ges.alphas()(i) / ges.betas()(i));
        if (static_cast<Index>(fin.size()) != red.size()) worst_eig = 1.0;
        for (Index i = 0; i < red.size(); ++i) {
            double best = 1e300;
            for (const Complex& f : fin) best = std::min(best, std::abs(red(i) - f) / std::max(1.0, std::abs(f)));
            worst_eig = std::max(worst_eig, best);
        }
    }
    for (ExampleTag t : {ExampleTag::Rdde1, ExampleTag::Rdde2, ExampleTag::Rdde3, ExampleTag::Ndde1, ExampleTag::Ndde2}) {
        const TauDiscretization d = discretize(example(t).system, 12);
        const ReducedOde r = split_and_reduce(d);
        const CVector lam = Eigen::EigenSolver<Matrix>(r.E11.lu().solve(r.A)).eigenvalues();
        for (Index i = 0; i < lam.size(); ++i) {
            const CMatrix M = lam(i) * d.E.cast<Complex>() - d.A.cast<Complex>();
            worst_bw = std::max(worst_bw, Eigen::JacobiSVD<CMatrix>(M).singularValues().minCoeff() / (std::abs(lam(i)) * d.E.norm() + d.A.norm()));
        }
    }
    o.require(worst_eig < 1e-8, "pencil spectrum " + fmt("%.1e", worst_eig));
    o.require(worst_bw < 1e-12, "pencil backward error " + fmt("%.1e", worst_bw));

    // Multinomial identity for the word sums, r <= 4.
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_pk = 0.0;
    for (int nu = 1; nu <= 3; ++nu) {
        for (int m = 1; m <= 3; ++m) {
            std::vector<Matrix> A;
            for (int k = 0; k < m; ++k) A.push_back(Matrix::NullaryExpr(nu, nu, [&] { return u(rng); }));
            const PkFamily fam = pk_family(A, 5);
            std::vector<Complex> z;
            for (int k = 0; k < m; ++k) z.push_back(std::polar(std::abs(u(rng)), std::numbers::pi * u(rng)));
            CMatrix S = CMatrix::Zero(nu, nu);
            for (int k = 0; k < m; ++k) S += z[static_cast<std::size_t>(k)] * A[static_cast<std::size_t>(k)].cast<Complex>();
            CMatrix power = CMatrix::Identity(nu, nu);
            for (int r = 1; r <= 4; ++r) {
                power *= S;
                CMatrix sum = CMatrix::Zero(nu, nu);
                for (std::size_t i = 0; i < fam.indices.size(); ++i) {
                    int total = 0;
                    Complex zk = 1.0;
                    for (int j = 0; j < m; ++j) {
                        total += fam.indices[i][static_cast<std::size_t>(j)];
                        zk *= std::pow(z[static_cast<std::size_t>(j)], fam.indices[i][static_cast<std::size_t>(j)]);
                    }
                    if (total == r) sum += zk * fam.matrices[i].cast<Complex>();
                }
                worst_pk = std::max(worst_pk, (sum - power).norm() / (1.0 + power.norm()));
            }
        }
    }
    o.require(worst_pk < 1e-12, "multinomial " + fmt("%.1e", worst_pk));

    // Essential radius against a dense 720 x 720 grid.
    const StandardForm sf = standard_form(conv({0, 0, 1, 1}));
    const std::vector<Matrix> A22(sf.A22.begin() + 1, sf.A22.end());
    double dense = 0.0;
    const double h = 2.0 * std::numbers::pi / 720.0;
    for (int i = 0; i < 720; ++i)
        for (int j = 0; j < 720; ++j) dense = std::max(dense, torus_radius(A22, {i * h, j * h}));
    const double rho = essential_radius(sf).rho;
    o.require(std::abs(rho - dense) < 1e-4, "essential radius " + fmt("%.1e", std::abs(rho - dense)) + " from dense grid");
}

}  // namespace

int main() {
    configure_workers_from_env();
    const std::vector<std::function<void(Outcome&)>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i](o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("criterion %zu: %s  [%s] (%.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), dt);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

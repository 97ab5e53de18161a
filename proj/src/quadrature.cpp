#include "tauh2/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tauh2/discretization.hpp"
#include "tauh2/error.hpp"
#include "tauh2/reduction.hpp"

namespace tauh2 {

namespace {

CMatrix characteristic_matrix(const DdaeSystem& sys, Complex s, CMatrix* derivative) {
    CMatrix delta = s * sys.E.cast<Complex>() - sys.A[0].cast<Complex>();
    if (derivative) *derivative = sys.E.cast<Complex>();
    for (int k = 1; k <= sys.m(); ++k) {
        const double tau = sys.delays[k - 1];
        const Complex e = std::exp(-tau * s);
        delta -= e * sys.A[k].cast<Complex>();
        if (derivative) *derivative += (tau * e) * sys.A[k].cast<Complex>();
    }
    return delta;
}

// Newton's method on det(Delta(s)); the step is 1 / tr(Delta^{-1} Delta').
bool newton_root(const DdaeSystem& sys, Complex& s) {
    for (int it = 0; it < 60; ++it) {
        CMatrix dd;
        const CMatrix delta = characteristic_matrix(sys, s, &dd);
        Eigen::PartialPivLU<CMatrix> lu(delta);
        const Complex tr = lu.solve(dd).trace();
        if (!std::isfinite(tr.real()) || !std::isfinite(tr.imag())) return true;  // landed on the root
        if (tr == Complex(0.0)) return false;
        const Complex step = 1.0 / tr;
        s -= step;
        if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(s))) return true;
    }
    return false;
}


CMatrix reflected_transfer(const TransferEvaluator& G, const std::vector<UnstableRoot>& roots, Complex s) {
    CMatrix g = G(s);
    for (const auto& r : roots) {
        g -= r.residue / (s - r.lambda);
        g += r.residue / (s + std::conj(r.lambda));
    }
    return g;
}

struct PanelSums {
    double g = 0.0;   // int g
    double wg = 0.0;  // int w^2 g
};

// Adaptive 15-point Gauss-Kronrod on [a, b] for g and w^2 g from shared
// evaluations; bisects until the Kronrod/Gauss difference of both parts is
// within tol of their magnitudes.
template <typename F>
PanelSums kronrod_panel(const F& g, double a, double b, double tol, int depth) {
    using K = boost::math::quadrature::gauss_kronrod<double, 15>;
    using G = boost::math::quadrature::gauss<double, 7>;
    const auto& x = K::abscissa();
    const auto& wk = K::weights();
    const auto& wg = G::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double k1 = 0.0, k2 = 0.0, g1 = 0.0, g2 = 0.0, l1 = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int copies = i == 0 ? 1 : 2;
        for (int side = 0; side < copies; ++side) {
            const double w = side == 0 ? c + h * x[i] : c - h * x[i];
            const double v = g(w);
            const double v2 = w * w * v;
            k1 += wk[i] * v;
            k2 += wk[i] * v2;
            l1 += wk[i] * std::abs(v);
            l2 += wk[i] * std::abs(v2);
            if (i % 2 == 0) {
                g1 += wg[i / 2] * v;
                g2 += wg[i / 2] * v2;
            }
        }
    }
    const bool ok = std::abs(k1 - g1) <= tol * l1 + 1e-300 && std::abs(k2 - g2) <= tol * l2 + 1e-300;
    if (ok || depth <= 0) return {h * k1, h * k2};
    const PanelSums left = kronrod_panel(g, a, c, tol, depth - 1);
    const PanelSums right = kronrod_panel(g, c, b, tol, depth - 1);
    return {left.g + right.g, left.wg + right.wg};
}

}  // namespace

CMatrix transfer_residue(const DdaeSystem& sys, Complex lambda, double radius) {
    constexpr int kPoints = 64;
    CMatrix acc = CMatrix::Zero(sys.q(), sys.p());
    for (int j = 0; j < kPoints; ++j) {
        const Complex offset = std::polar(radius, 2.0 * std::numbers::pi * (j + 0.5) / kPoints);
        acc += transfer_function(sys, lambda + offset) * offset;
    }
    return acc / static_cast<double>(kPoints);
}

std::vector<UnstableRoot> unstable_roots(const DdaeSystem& sys, int seed_degree) {
    const ReducedOde r = split_and_reduce(discretize(sys, seed_degree, Mode::Polynomial));
    std::vector<UnstableRoot> roots;
    if (r.order() == 0) return roots;
    const Matrix M = r.E11.partialPivLu().solve(r.A);
    const CVector seeds = Eigen::EigenSolver<Matrix>(M, false).eigenvalues();
    for (Index i = 0; i < seeds.size(); ++i) {
        Complex s = seeds(i);
        if (s.real() < 0.0) continue;
        if (!newton_root(sys, s) || s.real() < 0.0) continue;
        if (std::abs(s.imag()) < 1e-12 * std::max(1.0, std::abs(s))) s = Complex(s.real(), 0.0);
        const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const UnstableRoot& u) {
            return std::abs(u.lambda - s) <= 1e-8 * std::max(1.0, std::abs(s));
        });
        if (duplicate) continue;
        roots.push_back({s, CMatrix()});
    }
    for (auto& root : roots) {
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& other : roots) {
            if (&other != &root) gap = std::min(gap, std::abs(other.lambda - root.lambda));
        }
        const double radius = std::min(1e-2 * std::max(1.0, std::abs(root.lambda)), 0.25 * gap);
        root.residue = transfer_residue(sys, root.lambda, radius);
    }
    return roots;
}

OracleResult h2_quadrature(const DdaeSystem& sys, const OracleOptions& options) {
    sys.validate();
    if (!(options.rel_tol > 0.0)) throw Error(ErrorKind::InvalidInput, "oracle tolerance must be positive");
    OracleResult out;
    if (options.reflect_unstable) out.reflected = unstable_roots(sys);
    const auto& roots = out.reflected;

    const TransferEvaluator G(sys);
    auto g = [&](double w) {
        const Complex s(0.0, w);
        return (roots.empty() ? G(s) : reflected_transfer(G, roots, s)).squaredNorm();
    };
    const double panel_tol = std::max(1e-2 * options.rel_tol, 1e-14);

    // Integrates g and w^2 g over [lo, hi]; returns (int g, int w^2 g).
    auto window = [&](double lo, double hi) {
        const double len = hi - lo;
        const double width = std::max(options.panel_width, len / 2048.0);
        const Index panels = static_cast<Index>(std::ceil(len / width - 1e-12));
        std::vector<double> ig(panels), iw(panels);
        auto panel = [&](Index j) {
            const double a = lo + len * static_cast<double>(j) / panels;
            const double b = lo + len * static_cast<double>(j + 1) / panels;
            const PanelSums ps = kronrod_panel(g, a, b, panel_tol, 12);
            ig[j] = ps.g;
            iw[j] = ps.wg;
        };
        if (options.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
            for (Index j = 0; j < panels; ++j) panel(j);
        } else {
            for (Index j = 0; j < panels; ++j) panel(j);
        }
        double sg = 0.0, sw = 0.0;
        for (Index j = 0; j < panels; ++j) {
            sg += ig[j];
            sw += iw[j];
        }
        return std::pair{sg, sw};
    };

    double cutoff = options.initial_cutoff;
    const auto [head_lo, head_lo_w] = window(0.0, cutoff / 2.0);
    const auto [head_hi, head_hi_w] = window(cutoff / 2.0, cutoff);
    (void)head_lo_w;
    double integral = head_lo + head_hi;
    double c = head_hi_w / (cutoff / 2.0);
    double total = integral + c / cutoff;
    double previous_c = c;
    int growth = 0;

    while (true) {
        const double next = 2.0 * cutoff;
        if (next > options.max_cutoff) {
            throw Error(ErrorKind::OracleDivergence, "quadrature oracle did not converge before the frequency cutoff");
        }
        const auto [piece, piece_w] = window(cutoff, next);
        cutoff = next;
        integral += piece;
        c = piece_w / (cutoff / 2.0);
        const double updated = integral + c / cutoff;
        growth = (previous_c > 0.0 && c > 3.0 * previous_c) ? growth + 1 : 0;
        if (growth >= 2) {
            throw Error(ErrorKind::OracleDivergence,
                        "integrand does not decay like 1/w^2; feedthrough suspected");
        }
        previous_c = c;
        const bool done = std::abs(updated - total) <= options.rel_tol * std::abs(updated) / 10.0;
        total = updated;
        if (done) break;
    }
    out.cutoff = cutoff;
    out.tail = c / cutoff;
    out.norm = std::sqrt(std::max(0.0, total) / std::numbers::pi);
    return out;
}

double h2_quadrature_oracle(const DdaeSystem& sys, double rel_tol) {
    OracleOptions o;
    o.rel_tol = rel_tol;
    return h2_quadrature(sys, o).norm;
}

}  // namespace tauh2

#include "tauh2/diagnostics.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "tauh2/discretization.hpp"
#include "tauh2/error.hpp"

namespace tauh2 {

namespace {

void enumerate_total(int m, int total, int pos, MultiIndex& k, std::vector<MultiIndex>& out) {
    if (pos == m - 1) {
        k[pos] = total;
        out.push_back(k);
        return;
    }
    for (int v = total; v >= 0; --v) {
        k[pos] = v;
        enumerate_total(m, total - v, pos + 1, k, out);
    }
}

double spectral_radius(const CMatrix& M) {
    if (M.size() == 0) return 0.0;
    if (M.rows() == 1) return std::abs(M(0, 0));
    return Eigen::ComplexEigenSolver<CMatrix>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

// Nelder-Mead maximization of f over R^d.
std::vector<double> nelder_mead_max(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double step, int iterations, double& best) {
    const std::size_t d = x0.size();
    std::vector<std::vector<double>> simplex(d + 1, x0);
    for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += step;
    std::vector<double> values(d + 1);
    for (std::size_t i = 0; i <= d; ++i) values[i] = -f(simplex[i]);

    auto combine = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
        std::vector<double> r(d);
        for (std::size_t i = 0; i < d; ++i) r[i] = a[i] + t * (b[i] - a[i]);
        return r;
    };
    for (int it = 0; it < iterations; ++it) {
        std::vector<std::size_t> order(d + 1);
        for (std::size_t i = 0; i <= d; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t worst = order[d];
        std::vector<double> centroid(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[order[i]][j] / static_cast<double>(d);
        }
        const auto reflected = combine(centroid, simplex[worst], -1.0);
        const double fr = -f(reflected);
        if (fr < values[order[0]]) {
            const auto expanded = combine(centroid, simplex[worst], -2.0);
            const double fe = -f(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if (fr < values[order[d - 1]]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            const auto contracted = combine(centroid, simplex[worst], 0.5);
            const double fc = -f(contracted);
            if (fc < values[worst]) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for (std::size_t i = 1; i <= d; ++i) {
                    const std::size_t idx = order[i];
                    simplex[idx] = combine(simplex[order[0]], simplex[idx], 0.5);
                    values[idx] = -f(simplex[idx]);
                }
            }
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    best = -*it;
    return simplex[static_cast<std::size_t>(it - values.begin())];
}

}  // namespace

const Matrix* PkFamily::find(const MultiIndex& k) const {
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] == k) return &matrices[i];
    }
    return nullptr;
}

std::vector<MultiIndex> multi_indices_below(int m, int bound) {
    std::vector<MultiIndex> out;
    if (bound <= 0) return out;
    if (m == 0) {
        out.emplace_back();
        return out;
    }
    MultiIndex k(static_cast<std::size_t>(m), 0);
    for (int total = 0; total < bound; ++total) enumerate_total(m, total, 0, k, out);
    return out;
}

PkFamily pk_family(const std::vector<Matrix>& A22, int order) {
    PkFamily fam;
    fam.m = static_cast<int>(A22.size());
    fam.nu = fam.m > 0 ? A22[0].rows() : 0;
    fam.indices = multi_indices_below(fam.m, order);
    std::map<MultiIndex, std::size_t> position;
    for (const auto& k : fam.indices) {
        Matrix P;
        if (std::all_of(k.begin(), k.end(), [](int v) { return v == 0; })) {
            P = Matrix::Identity(fam.nu, fam.nu);
        } else {
            P = Matrix::Zero(fam.nu, fam.nu);
            for (int j = 0; j < fam.m; ++j) {
                if (k[j] == 0) continue;
                MultiIndex prev = k;
                --prev[j];
                P += A22[j] * fam.matrices[position.at(prev)];
            }
        }
        position[k] = fam.matrices.size();
        fam.matrices.push_back(std::move(P));
    }
    return fam;
}

double torus_radius(const std::vector<Matrix>& A22, const std::vector<double>& theta) {
    if (A22.empty()) return 0.0;
    CMatrix M = CMatrix::Zero(A22[0].rows(), A22[0].cols());
    for (std::size_t k = 0; k < A22.size(); ++k) M += std::polar(1.0, theta[k]) * A22[k].cast<Complex>();
    return spectral_radius(M);
}

EssentialRadius essential_radius(const std::vector<Matrix>& A22, const TorusSearch& search) {
    EssentialRadius out;
    const int m = static_cast<int>(A22.size());
    out.theta.assign(static_cast<std::size_t>(m), 0.0);
    if (m == 0 || A22[0].size() == 0) return out;
    if (m == 1) {
        out.rho = torus_radius(A22, out.theta);
        return out;
    }
    const int free_dims = m - 1;
    const int grid = search.grid > 0 ? search.grid : (m <= 2 ? 64 : 24);
    std::size_t points = 1;
    for (int d = 0; d < free_dims; ++d) points *= static_cast<std::size_t>(grid);
    const double h = 2.0 * std::numbers::pi / grid;

    auto phases = [&](std::size_t idx) {
        std::vector<double> th(static_cast<std::size_t>(m), 0.0);
        for (int d = 0; d < free_dims; ++d) {
            th[static_cast<std::size_t>(d + 1)] = h * static_cast<double>(idx % grid);
            idx /= grid;
        }
        return th;
    };
    std::vector<double> values(points);
    if (search.exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < points; ++i) values[i] = torus_radius(A22, phases(i));
    } else {
        for (std::size_t i = 0; i < points; ++i) values[i] = torus_radius(A22, phases(i));
    }
    const auto best_it = std::max_element(values.begin(), values.end());
    const std::vector<double> start = phases(static_cast<std::size_t>(best_it - values.begin()));
    out.rho = *best_it;
    out.theta = start;

    if (search.refinement_steps > 0) {
        auto f = [&](const std::vector<double>& free) {
            std::vector<double> th(static_cast<std::size_t>(m), 0.0);
            std::copy(free.begin(), free.end(), th.begin() + 1);
            return torus_radius(A22, th);
        };
        double refined = 0.0;
        const auto x = nelder_mead_max(f, std::vector<double>(start.begin() + 1, start.end()), 0.5 * h,
                                       search.refinement_steps, refined);
        if (refined > out.rho) {
            out.rho = refined;
            for (int d = 0; d < free_dims; ++d) {
                out.theta[static_cast<std::size_t>(d + 1)] =
                    std::fmod(std::fmod(x[static_cast<std::size_t>(d)], 2.0 * std::numbers::pi) + 2.0 * std::numbers::pi,
                              2.0 * std::numbers::pi);
            }
        }
    }
    return out;
}

EssentialRadius essential_radius(const StandardForm& sf, const TorusSearch& search) {
    std::vector<Matrix> delayed(sf.A22.begin() + 1, sf.A22.end());
    if (sf.nu == 0) delayed.clear();
    return essential_radius(delayed, search);
}

double nominal_abscissa(const DdaeSystem& sys, int degree) {
    const ReducedOde r = split_and_reduce(discretize(sys, degree, Mode::Polynomial));
    if (r.order() == 0) return -std::numeric_limits<double>::infinity();
    const Matrix M = r.E11.partialPivLu().solve(r.A);
    return Eigen::EigenSolver<Matrix>(M, false).eigenvalues().real().maxCoeff();
}

FeedthroughTest feedthrough_family_test(const StandardForm& sf) {
    FeedthroughTest t;
    if (sf.nu == 0) return t;
    t.tolerance = kPkRelativeTolerance * sf.C2.norm() * sf.B2.norm();
    const std::vector<Matrix> delayed(sf.A22.begin() + 1, sf.A22.end());
    // With no delays the only member is P_0 = I.
    const PkFamily fam = delayed.empty() ? PkFamily{sf.nu, 0, {MultiIndex{}}, {Matrix::Identity(sf.nu, sf.nu)}}
                                         : pk_family(delayed, static_cast<int>(sf.nu));
    for (std::size_t i = 0; i < fam.indices.size(); ++i) {
        ++t.tested;
        const double v = (sf.C2 * fam.matrices[i] * sf.B2).norm();
        if (!(v < t.tolerance) && v > 0.0) {
            t.pass = false;
            t.first_violation = fam.indices[i];
            t.violation_norm = v;
            return t;
        }
    }
    return t;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Finite: return "finite-strong-H2";
        case Verdict::Infinite: return "infinite-strong-H2";
        case Verdict::Indeterminate: return "indeterminate";
    }
    return "?";
}

std::string format_multi_index(const MultiIndex& k) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
    os << ')';
    return os.str();
}

DiagnosticsReport run_diagnostics(const DdaeSystem& sys, const DiagnosticsOptions& options) {
    DiagnosticsReport rep;
    rep.abscissa_degree = options.degree;
    rep.index = index_check(sys);
    rep.index_ok = rep.index.index_at_most_one;
    if (!rep.index_ok) {
        rep.notes.push_back("differentiation index exceeds one");
        rep.verdict = Verdict::Indeterminate;
        return rep;
    }
    const StandardForm sf = standard_form(sys);
    rep.rank_ambiguous = sf.rank.ambiguous;
    for (const auto& w : sf.warnings) rep.notes.push_back(w);

    rep.essential = essential_radius(sf, options.torus);
    rep.essential_ok = rep.essential.rho < 1.0;
    if (!rep.essential_ok) {
        rep.notes.push_back("essential spectral radius is not below one");
        rep.verdict = Verdict::Infinite;
        return rep;
    }
    try {
        rep.abscissa = nominal_abscissa(sys, options.degree);
    } catch (const Error& e) {
        rep.notes.push_back(std::string("abscissa computation failed: ") + e.what());
        rep.verdict = Verdict::Indeterminate;
        return rep;
    }
    rep.nominal_ok = rep.abscissa < 0.0;
    rep.strongly_stable = rep.essential_ok && rep.nominal_ok;
    if (!rep.nominal_ok) rep.notes.push_back("discretized spectral abscissa is not negative");

    rep.feedthrough = feedthrough_family_test(sf);
    rep.feedthrough_free = rep.feedthrough.pass;
    if (!rep.feedthrough_free) rep.notes.push_back("feedthrough under delay perturbations");

    if (rep.strongly_stable && rep.feedthrough_free) {
        rep.verdict = rep.rank_ambiguous ? Verdict::Indeterminate : Verdict::Finite;
    } else {
        rep.verdict = Verdict::Infinite;
    }
    if (rep.strongly_stable) rep.notes.push_back("strong stability certified approximately: torus search plus degree-" +
                                                 std::to_string(options.degree) + " abscissa");
    return rep;
}

}  // namespace tauh2

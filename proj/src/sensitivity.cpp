#include "tauh2/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "tauh2/error.hpp"
#include "tauh2/orthopoly.hpp"

namespace tauh2 {

AdjointCache adjoint_cache(const TauDiscretization& d, const ReducedOde& r, const H2Result& h) {
    AdjointCache c;
    const Matrix left = r.U_perp - r.A12 * r.solve_A22(r.U);      // r x dim
    const Matrix right = r.V_perp - r.V * r.solve_A22(r.A21);     // dim x r
    c.Q_U = h.Q * left;
    c.P_V = right * h.P;
    c.W = r.V * r.solve_A22(r.U);
    c.D_S = c.P_V * r.E11.transpose() * c.Q_U - c.W * d.B * (r.B.transpose() * c.Q_U) -
            (c.P_V * r.C.transpose()) * (d.C * c.W);
    return c;
}

GradientBundle gradient(const DdaeSystem& sys, int degree, Mode mode) {
    if (mode != Mode::Polynomial) {
        throw Error(ErrorKind::UnsupportedMode, "gradients are only available for the polynomial discretization");
    }
    const TauDiscretization d = discretize(sys, degree, mode);
    const ReducedOde r = split_and_reduce(d);
    GradientBundle g;
    try {
        g.h2 = h2_norm(r, false);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Unstable || e.kind() == ErrorKind::FeedthroughPresent) {
            throw Error(ErrorKind::NoGradient, std::string("gradient undefined: ") + e.what());
        }
        throw;
    }
    g.norm_squared = g.h2.norm_squared;
    const Index n = sys.n();
    const int m = sys.m();
    const AdjointCache c = adjoint_cache(d, r, g.h2);
    const BasisSpec& basis = d.bases.front();

    // Columns of D_S acting on the first n rows of dA_N: D_S [I; 0].
    const Matrix DS_top = c.D_S.leftCols(n);
    g.dA.resize(static_cast<std::size_t>(m + 1));
    for (int k = 0; k <= m; ++k) {
        const double theta = k == 0 ? 0.0 : -sys.delays[static_cast<std::size_t>(k - 1)];
        const Matrix eps = eval_functional(basis, theta, n);
        g.dA[static_cast<std::size_t>(k)] = 2.0 * (eps * DS_top).transpose();
    }

    g.dtau.assign(static_cast<std::size_t>(m), 0.0);
    if (m > 0) {
        const double tau_m = sys.delays.back();
        for (int k = 1; k < m; ++k) {
            const double tau = sys.delays[static_cast<std::size_t>(k - 1)];
            const Matrix deps = derivative_eval_functional(basis, -tau, n);
            g.dtau[static_cast<std::size_t>(k - 1)] = -2.0 * (DS_top * sys.A[static_cast<std::size_t>(k)] * deps).trace();
        }
        // tau_m moves the basis domain: the derivative rows scale by 1/tau_m
        // and the interior evaluation points move relative to the domain.
        // The evaluation at -tau_m itself stays (-1)^j.
        const Matrix Dm = derivative_matrix(basis, n);
        double dm = -2.0 * (c.D_S.rightCols(Dm.rows()) * Dm).trace() / tau_m;
        for (int k = 1; k < m; ++k) {
            dm -= sys.delays[static_cast<std::size_t>(k - 1)] / tau_m * g.dtau[static_cast<std::size_t>(k - 1)];
        }
        g.dtau[static_cast<std::size_t>(m - 1)] = dm;
    }

    const Matrix QU_top = c.Q_U.leftCols(n);
    g.dB = 2.0 * QU_top.transpose() * r.B;
    const Matrix eps0 = eval_functional(basis, 0.0, n);
    g.dC = 2.0 * r.C * c.P_V.transpose() * eps0.transpose();
    return g;
}

std::vector<double> chain_parameters(const GradientBundle& g, const std::vector<ParameterBinding>& bindings) {
    std::vector<double> out;
    out.reserve(bindings.size());
    for (const auto& b : bindings) {
        double acc = 0.0;
        for (const auto& t : b.targets) {
            if (const auto* mt = std::get_if<MatrixTarget>(&t)) {
                double entry = 0.0;
                switch (mt->kind) {
                    case MatrixKind::A: entry = g.dA[static_cast<std::size_t>(mt->delay_index)](mt->row, mt->col); break;
                    case MatrixKind::B: entry = g.dB(mt->row, mt->col); break;
                    case MatrixKind::C: entry = g.dC(mt->row, mt->col); break;
                }
                acc += mt->coefficient * entry;
            } else {
                const auto& dt = std::get<DelayTarget>(t);
                acc += g.dtau[static_cast<std::size_t>(dt.delay_index - 1)];
            }
        }
        out.push_back(acc);
    }
    return out;
}

GradientBundle gradient(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings, int degree, Mode mode) {
    GradientBundle g = gradient(apply_parameters(sys, bindings), degree, mode);
    g.dparams = chain_parameters(g, bindings);
    return g;
}

double relative_difference(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) return 0.0;
    return std::abs(a - b) / scale;
}

FdReport fd_check(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings, int degree, double step,
                  const std::vector<std::string>& subset) {
    const GradientBundle g = gradient(sys, bindings, degree);
    FdReport rep;
    std::vector<double> values;
    for (const auto& b : bindings) values.push_back(b.value);
    for (std::size_t j = 0; j < bindings.size(); ++j) {
        if (!subset.empty() && std::find(subset.begin(), subset.end(), bindings[j].name) == subset.end()) continue;
        const double h = step * (values[j] != 0.0 ? std::abs(values[j]) : 1.0);
        auto eval = [&](double v) {
            std::vector<double> x = values;
            x[j] = v;
            return h2_norm(apply_parameters(sys, bindings, x), degree).norm_squared;
        };
        FdEntry e;
        e.name = bindings[j].name;
        e.analytic = g.dparams[j];
        e.finite_difference = (eval(values[j] + h) - eval(values[j] - h)) / (2.0 * h);
        e.relative_error = relative_difference(e.analytic, e.finite_difference);
        rep.max_relative_error = std::max(rep.max_relative_error, e.relative_error);
        rep.entries.push_back(e);
    }
    return rep;
}

}  // namespace tauh2

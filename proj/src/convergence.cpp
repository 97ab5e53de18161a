#include "tauh2/convergence.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "tauh2/error.hpp"
#include "tauh2/h2.hpp"
#include "tauh2/quadrature.hpp"

namespace tauh2 {

namespace {

constexpr int kPreAsymptotic = 8;

ConvergenceRow evaluate_row(const DdaeSystem& sys, int degree, Mode mode, bool allow_flip) {
    ConvergenceRow row;
    row.degree = degree;
    row.mode = mode;
    try {
        const H2Result r = h2_norm(sys, degree, mode, allow_flip);
        row.h2 = r.norm;
        row.flipped = static_cast<int>(r.flipped_poles.size());
    } catch (const Error& e) {
        row.h2 = std::numeric_limits<double>::quiet_NaN();
        row.failure = e.what();
    }
    return row;
}

RateFit line_fit(const std::vector<double>& x, const std::vector<double>& y) {
    RateFit fit;
    const std::size_t n = x.size();
    fit.points = static_cast<int>(n);
    if (n < 2) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.valid = true;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    return fit;
}

bool usable(const ConvergenceRow& r, double floor) {
    return std::isfinite(r.abs_error) && r.abs_error > floor;
}

}  // namespace

RateFit fit_algebraic(const std::vector<ConvergenceRow>& rows, double floor) {
    const double threshold = std::max(100.0 * std::numeric_limits<double>::epsilon(), floor);
    // Longest contiguous run of usable rows past the pre-asymptotic range.
    std::size_t best_begin = 0, best_len = 0;
    for (std::size_t i = 0; i < rows.size();) {
        if (rows[i].degree < kPreAsymptotic || !usable(rows[i], threshold)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < rows.size() && usable(rows[j], threshold)) ++j;
        if (j - i > best_len) {
            best_begin = i;
            best_len = j - i;
        }
        i = j;
    }
    std::vector<double> x, y;
    for (std::size_t i = best_begin; i < best_begin + best_len; ++i) {
        x.push_back(std::log10(static_cast<double>(rows[i].degree)));
        y.push_back(std::log10(rows[i].abs_error));
    }
    RateFit fit = line_fit(x, y);
    if (best_len > 0) {
        fit.first_degree = rows[best_begin].degree;
        fit.last_degree = rows[best_begin + best_len - 1].degree;
    }
    return fit;
}

RateFit fit_geometric(const std::vector<ConvergenceRow>& rows, double floor) {
    std::vector<double> x, y;
    RateFit fit;
    for (const auto& r : rows) {
        if (!usable(r, floor)) break;
        x.push_back(static_cast<double>(r.degree));
        y.push_back(std::log10(r.abs_error));
    }
    fit = line_fit(x, y);
    if (!x.empty()) {
        fit.first_degree = static_cast<int>(x.front());
        fit.last_degree = static_cast<int>(x.back());
    }
    return fit;
}

std::vector<ConvergenceRow> norm_sweep(const DdaeSystem& sys, const std::vector<int>& degrees, Mode mode,
                                       bool allow_flip, Exec exec) {
    std::vector<ConvergenceRow> rows(degrees.size());
    const auto count = static_cast<std::ptrdiff_t>(degrees.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            const auto k = static_cast<std::size_t>(i);
            rows[k] = evaluate_row(sys, degrees[k], mode, allow_flip);
        }
    } else {
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            const auto k = static_cast<std::size_t>(i);
            rows[k] = evaluate_row(sys, degrees[k], mode, allow_flip);
        }
    }
    return rows;
}

double convergence_reference(const DdaeSystem& sys, Mode mode, const ReferenceSpec& spec, double* uncertainty) {
    double value = 0.0, unc = 0.0;
    switch (spec.kind) {
        case ReferenceKind::Given:
            value = spec.value;
            break;
        case ReferenceKind::Oracle: {
            OracleOptions opts;
            opts.rel_tol = spec.oracle_tol;
            opts.reflect_unstable = true;
            value = h2_quadrature(sys, opts).norm;
            unc = spec.oracle_tol * value;
            break;
        }
        case ReferenceKind::HighDegree: {
            // Splines converge fastest; with one delay they coincide with the polynomial basis.
            const Mode m = sys.m() >= 1 ? Mode::Spline : mode;
            value = h2_norm(sys, spec.high_degree, m, true).norm;
            const double lower = h2_norm(sys, spec.high_degree - 10, m, true).norm;
            unc = std::abs(value - lower);
            break;
        }
    }
    if (uncertainty) *uncertainty = unc;
    return value;
}

ConvergenceStudy convergence_study(const DdaeSystem& sys, const std::vector<int>& degrees, Mode mode,
                                   const ReferenceSpec& reference, bool allow_flip, Exec exec) {
    ConvergenceStudy out;
    out.reference_kind = reference.kind;
    out.reference = convergence_reference(sys, mode, reference, &out.reference_uncertainty);
    out.rows = norm_sweep(sys, degrees, mode, allow_flip, exec);
    for (auto& r : out.rows) r.abs_error = std::abs(r.h2 - out.reference);
    const double floor = 10.0 * out.reference_uncertainty;
    out.algebraic = fit_algebraic(out.rows, floor);
    out.geometric = fit_geometric(out.rows, std::max(floor, 1e-12));
    return out;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
    out << "N,h2,abs_error,mode\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%s\n", r.degree, r.h2, r.abs_error, to_string(r.mode));
        out << buf;
    }
}

std::vector<int> parse_degree_range(const std::string& text) {
    auto to_int = [&](const std::string& s) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw Error(ErrorKind::InvalidInput, "bad degree '" + s + "' in '" + text + "'");
        return v;
    };
    std::vector<int> out;
    if (text.find(':') != std::string::npos) {
        std::vector<int> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(to_int(item));
        if (parts.size() != 3 || parts[1] <= 0 || parts[0] > parts[2]) {
            throw Error(ErrorKind::InvalidInput, "degree range must be start:step:stop with step > 0");
        }
        for (int n = parts[0]; n <= parts[2]; n += parts[1]) out.push_back(n);
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_int(item));
    }
    if (out.empty()) throw Error(ErrorKind::InvalidInput, "empty degree list");
    for (int n : out) {
        if (n < 1) throw Error(ErrorKind::InvalidInput, "degrees must be positive");
    }
    return out;
}

}  // namespace tauh2

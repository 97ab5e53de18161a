#include "tauh2/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tauh2/convergence.hpp"
#include "tauh2/diagnostics.hpp"
#include "tauh2/h2.hpp"
#include "tauh2/parallel.hpp"
#include "tauh2/quadrature.hpp"
#include "tauh2/sensitivity.hpp"
#include "tauh2/synthesis.hpp"
#include "tauh2/system_io.hpp"

namespace tauh2 {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput:
        case ErrorKind::OrderingViolation:
        case ErrorKind::UnsupportedMode:
            return kExitInput;
        case ErrorKind::IndexError:
        case ErrorKind::FeedthroughPresent:
        case ErrorKind::Unstable:
        case ErrorKind::NoGradient:
            return kExitInfinite;
        default:
            return kExitNumerical;
    }
}

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt6(Complex z) {
    std::string s = fmt6(z.real());
    s += z.imag() < 0 ? " - " : " + ";
    return s + fmt6(std::abs(z.imag())) + "i";
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

double to_double(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw Error(ErrorKind::InvalidInput, "bad number '" + s + "' in " + what);
    return v;
}

struct Common {
    std::string system_path;
    std::string example;
    std::string delta = "1,1,0,0";
    std::string intro_delays = "1,2,3";
    std::vector<std::string> set;
    int degree = 40;
    std::string mode = "poly";
    std::string out;
    bool force = false;
};

struct Loaded {
    std::string label;
    DdaeSystem system;
    std::vector<ParameterBinding> bindings;
    std::vector<std::string> default_free;
};

void add_common(CLI::App* cmd, Common& c, bool degree_and_mode = true) {
    auto* sys = cmd->add_option("--system", c.system_path, "System description file (JSON)");
    auto* ex = cmd->add_option("--example", c.example, "Built-in example tag");
    sys->excludes(ex);
    cmd->add_option("--delta", c.delta, "conv-sys switches, e.g. 1,1,0,0");
    cmd->add_option("--intro-delays", c.intro_delays, "intro-feedthrough delays tau1,tau2,tau3");
    cmd->add_option("--set", c.set, "Override a parameter: name=value (repeatable)");
    if (degree_and_mode) {
        cmd->add_option("--degree,-N", c.degree, "Discretization degree N")->check(CLI::PositiveNumber);
        cmd->add_option("--mode", c.mode, "Discretization: poly or spline");
    }
    cmd->add_option("--out,-o", c.out, "Output file");
    cmd->add_flag("--force", c.force, "Skip the diagnostics gate");
}

Loaded load(const Common& c) {
    if (c.system_path.empty() == c.example.empty()) {
        throw Error(ErrorKind::InvalidInput, "exactly one of --system and --example is required");
    }
    Loaded l;
    if (!c.system_path.empty()) {
        SystemFile f = load_system(c.system_path);
        l.label = c.system_path;
        l.system = std::move(f.system);
        l.bindings = std::move(f.bindings);
        for (const auto& b : l.bindings) l.default_free.push_back(b.name);
    } else {
        ExampleId id;
        id.tag = parse_example_tag(c.example);
        std::vector<int> delta;
        for (const auto& s : split(c.delta, ',')) delta.push_back(static_cast<int>(to_double(s, "--delta")));
        id.delta = parse_delta(delta);
        const auto taus = split(c.intro_delays, ',');
        if (taus.size() != 3) throw Error(ErrorKind::InvalidInput, "--intro-delays needs three values");
        for (std::size_t i = 0; i < 3; ++i) id.intro_delays[i] = to_double(taus[i], "--intro-delays");
        Example ex = build_example(id);
        l.label = ex.tag;
        l.system = std::move(ex.system);
        l.bindings = std::move(ex.bindings);
        l.default_free = std::move(ex.default_free);
    }
    for (const auto& kv : c.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::InvalidInput, "--set expects name=value");
        const std::string name = kv.substr(0, eq);
        const auto j = find_binding(l.bindings, name);
        if (!j) throw Error(ErrorKind::InvalidInput, "unknown parameter '" + name + "'");
        l.bindings[*j].value = to_double(kv.substr(eq + 1), "--set");
    }
    if (!l.bindings.empty()) l.system = apply_parameters(l.system, l.bindings);
    return l;
}

/// Output sink: the --out file when given, `fallback` otherwise.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
            os_ = file_.get();
        }
    }
    std::ostream& operator*() { return *os_; }
    bool to_file() const { return file_ != nullptr; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

struct Gate {
    int code = kExitOk;
    bool allow_flip = false;
};

/// Runs the diagnostics unless forced. Nominal instability alone is let
/// through with pole flipping when `flip_ok` is set.
Gate gate(const DdaeSystem& sys, const Common& c, bool flip_ok, std::ostream& err) {
    Gate g;
    if (c.force) {
        g.allow_flip = flip_ok;
        return g;
    }
    DiagnosticsOptions opts;
    opts.degree = c.degree;
    const DiagnosticsReport rep = run_diagnostics(sys, opts);
    if (rep.verdict == Verdict::Finite) return g;
    if (flip_ok && rep.only_nominally_unstable()) {
        err << "warning: nominal abscissa " << fmt6(rep.abscissa)
            << " >= 0; the strong H2-norm is infinite, evaluating the pole-flipped norm\n";
        g.allow_flip = true;
        return g;
    }
    err << "diagnostics: " << to_string(rep.verdict);
    for (const auto& note : rep.notes) err << "; " << note;
    err << " (use --force to bypass)\n";
    g.code = rep.verdict == Verdict::Infinite ? kExitInfinite : kExitNumerical;
    return g;
}

nlohmann::json report_json(const Loaded& l, const DiagnosticsReport& r) {
    nlohmann::json j;
    j["system"] = l.label;
    j["index_ok"] = r.index_ok;
    j["nu"] = r.index.nu;
    j["rank_ambiguous"] = r.rank_ambiguous;
    j["essential_radius"] = r.essential.rho;
    j["essential_theta"] = r.essential.theta;
    j["strongly_stable"] = r.strongly_stable;
    j["nominal_abscissa"] = r.abscissa;
    j["abscissa_degree"] = r.abscissa_degree;
    j["feedthrough_free"] = r.feedthrough_free;
    j["pk_tested"] = r.feedthrough.tested;
    if (!r.feedthrough.pass) {
        j["first_violation"] = r.feedthrough.first_violation;
        j["violation_norm"] = r.feedthrough.violation_norm;
    }
    j["verdict"] = to_string(r.verdict);
    j["notes"] = r.notes;
    return j;
}

int cmd_check(const Common& c, bool as_json, std::ostream& out) {
    const Loaded l = load(c);
    DiagnosticsOptions opts;
    opts.degree = c.degree;
    const DiagnosticsReport r = run_diagnostics(l.system, opts);
    Sink sink(c.out, out);
    if (as_json) {
        *sink << report_json(l, r).dump(2) << "\n";
    } else {
        auto yes = [](bool b) { return b ? "ok" : "FAIL"; };
        *sink << "system: " << l.label << " (n=" << l.system.n() << ", m=" << l.system.m()
              << ", nu=" << r.index.nu << ")\n";
        *sink << "index <= 1: " << yes(r.index_ok) << " (smallest singular value "
              << fmt6(r.index.smallest_singular_value) << ")\n";
        if (r.index_ok) {
            *sink << "essential radius: " << fmt6(r.essential.rho) << " " << yes(r.essential_ok) << "\n";
        }
        if (r.essential_ok) {
            *sink << "nominal abscissa (N=" << r.abscissa_degree << "): " << fmt6(r.abscissa) << " "
                  << yes(r.nominal_ok) << "\n";
        }
        if (r.index_ok && r.essential_ok) {
            *sink << "feedthrough family: " << (r.feedthrough.pass ? "pass" : "FAIL") << " ("
                  << r.feedthrough.tested << " multi-indices tested)";
            if (!r.feedthrough.pass) {
                *sink << ", first violation k=" << format_multi_index(r.feedthrough.first_violation)
                      << " with ||C2 P_k B2|| = " << fmt6(r.feedthrough.violation_norm);
            }
            *sink << "\n";
        }
        for (const auto& note : r.notes) *sink << "note: " << note << "\n";
        *sink << "verdict: " << to_string(r.verdict) << "\n";
    }
    switch (r.verdict) {
        case Verdict::Finite: return kExitOk;
        case Verdict::Infinite: return kExitInfinite;
        case Verdict::Indeterminate: return kExitNumerical;
    }
    return kExitNumerical;
}

int cmd_norm(const Common& c, std::ostream& out, std::ostream& err) {
    const Loaded l = load(c);
    const Gate g = gate(l.system, c, true, err);
    if (g.code != kExitOk) return g.code;
    const Mode mode = parse_mode(c.mode);
    const H2Result r = h2_norm(l.system, c.degree, mode, g.allow_flip);
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    out << "H2 norm: " << fmt6(r.norm) << "\n";
    out << "degree: " << c.degree << " (" << to_string(mode) << ")\n";
    out << "primal trace: " << fmt6(r.primal_trace) << ", dual trace: " << fmt6(r.dual_trace) << "\n";
    if (r.flipped()) {
        out << "flipped poles (" << r.flipped_poles.size() << "):";
        for (const auto& z : r.flipped_poles) out << " " << fmt6(z);
        out << "\n";
    } else {
        out << "flipped poles: none\n";
    }
    if (!c.out.empty()) {
        Sink sink(c.out, out);
        *sink << "N,h2,mode,flipped\n"
              << c.degree << "," << fmt17(r.norm) << "," << to_string(mode) << "," << r.flipped_poles.size() << "\n";
    }
    return kExitOk;
}

int cmd_oracle(const Common& c, double tol, bool reflect, std::ostream& out, std::ostream& err) {
    const Loaded l = load(c);
    const Gate g = gate(l.system, c, true, err);
    if (g.code != kExitOk) return g.code;
    OracleOptions opts;
    opts.rel_tol = tol;
    opts.reflect_unstable = reflect || g.allow_flip;
    const OracleResult r = h2_quadrature(l.system, opts);
    out << "oracle H2 norm: " << fmt6(r.norm) << "\n";
    out << "relative tolerance: " << fmt6(tol) << ", cutoff: " << fmt6(r.cutoff) << ", tail: " << fmt6(r.tail)
        << "\n";
    if (!r.reflected.empty()) {
        out << "reflected roots (" << r.reflected.size() << "):";
        for (const auto& root : r.reflected) out << " " << fmt6(root.lambda);
        out << "\n";
    }
    if (!c.out.empty()) {
        Sink sink(c.out, out);
        *sink << "h2,rel_tol,cutoff,tail\n"
              << fmt17(r.norm) << "," << fmt17(tol) << "," << fmt17(r.cutoff) << "," << fmt17(r.tail) << "\n";
    }
    return kExitOk;
}

struct SweepArgs {
    std::string degrees = "8:2:60";
    std::string reference = "oracle";
    double ref_value = 0.0;
    double tol = 1e-11;
    int high_degree = 80;
    bool serial = false;
};

int cmd_sweep(const Common& c, const SweepArgs& s, std::ostream& out, std::ostream& err) {
    const Loaded l = load(c);
    const Gate g = gate(l.system, c, true, err);
    if (g.code != kExitOk) return g.code;
    ReferenceSpec ref;
    if (s.reference == "oracle") {
        ref.kind = ReferenceKind::Oracle;
        ref.oracle_tol = s.tol;
    } else if (s.reference == "high") {
        ref.kind = ReferenceKind::HighDegree;
        ref.high_degree = s.high_degree;
    } else if (s.reference == "value") {
        ref.kind = ReferenceKind::Given;
        ref.value = s.ref_value;
    } else {
        throw Error(ErrorKind::InvalidInput, "--reference must be oracle, high or value");
    }
    const ConvergenceStudy st = convergence_study(l.system, parse_degree_range(s.degrees), parse_mode(c.mode), ref,
                                                  true, s.serial ? Exec::Serial : Exec::Parallel);
    Sink sink(c.out, out);
    write_convergence_csv(*sink, st.rows);
    std::ostream& info = sink.to_file() ? out : err;
    info << "reference: " << fmt6(st.reference) << " (" << s.reference << ")\n";
    if (st.algebraic.valid) {
        info << "algebraic order: " << fmt6(st.algebraic.order()) << " over N=" << st.algebraic.first_degree << ".."
             << st.algebraic.last_degree << " (" << st.algebraic.points << " points)\n";
    }
    if (st.geometric.valid) {
        info << "geometric rate: " << fmt6(std::pow(10.0, st.geometric.slope)) << " per degree, correlation "
             << fmt6(st.geometric.correlation) << " over N=" << st.geometric.first_degree << ".."
             << st.geometric.last_degree << "\n";
    }
    for (const auto& r : st.rows) {
        if (!r.failure.empty()) info << "N=" << r.degree << " failed: " << r.failure << "\n";
    }
    return kExitOk;
}

int cmd_grad(const Common& c, const std::string& params, double step, std::ostream& out, std::ostream& err) {
    const Loaded l = load(c);
    if (l.bindings.empty()) throw Error(ErrorKind::InvalidInput, "system has no parameters");
    const Gate g = gate(l.system, c, false, err);
    if (g.code != kExitOk) return g.code;
    const FdReport rep = fd_check(l.system, l.bindings, c.degree, step, split(params, ','));
    Sink sink(c.out, out);
    *sink << "name,analytic,finite_difference,relative_error\n";
    for (const auto& e : rep.entries) {
        *sink << e.name << "," << fmt17(e.analytic) << "," << fmt17(e.finite_difference) << ","
              << fmt17(e.relative_error) << "\n";
    }
    (sink.to_file() ? out : err) << "max relative error: " << fmt6(rep.max_relative_error) << "\n";
    return kExitOk;
}

struct SynthArgs {
    std::string free;
    int max_iters = 200;
    double grad_tol = 1e-6;
    std::string trace;
    std::string save_system;
};

int cmd_synth(const Common& c, const SynthArgs& s, std::ostream& out, std::ostream& err) {
    const Loaded l = load(c);
    if (l.bindings.empty()) throw Error(ErrorKind::InvalidInput, "system has no parameters");
    const Gate g = gate(l.system, c, false, err);
    if (g.code != kExitOk) return g.code;
    SynthesisConfig cfg;
    cfg.degree = c.degree;
    cfg.max_iters = s.max_iters;
    cfg.grad_tol = s.grad_tol;
    cfg.free = s.free.empty() ? l.default_free : split(s.free, ',');
    std::vector<ParameterBinding> bindings = l.bindings;
    const SynthesisResult r = synthesize(l.system, bindings, cfg);

    out << "verdict: " << to_string(r.trace.verdict) << " after " << r.trace.iterations << " iterations ("
        << r.trace.message << ")\n";
    out << "start H2 norm: " << fmt6(std::sqrt(r.trace.rows.front().fval)) << "\n";
    out << "final H2 norm: " << fmt6(r.h2.norm) << "\n";
    for (std::size_t i = 0; i < r.names.size(); ++i) out << r.names[i] << " = " << fmt6(r.optimum[i]) << "\n";
    if (!c.out.empty()) {
        Sink sink(c.out, out);
        *sink << "name,value\n";
        for (std::size_t i = 0; i < r.names.size(); ++i) *sink << r.names[i] << "," << fmt17(r.optimum[i]) << "\n";
        *sink << "h2," << fmt17(r.h2.norm) << "\n";
    }
    if (!s.trace.empty()) {
        Sink sink(s.trace, out);
        write_trace_csv(*sink, r.trace);
    }
    if (!s.save_system.empty()) {
        SystemFile f{r.system, bindings};
        for (std::size_t j = 0; j < f.bindings.size(); ++j) f.bindings[j].value = r.all_values[j];
        save_system(s.save_system, f);
    }
    return r.trace.verdict == SynthesisVerdict::LineSearchFailure ? kExitNumerical : kExitOk;
}

int cmd_example(const Common& c, bool list, std::ostream& out) {
    if (list) {
        for (const auto& t : example_tags()) out << t << "\n";
        return kExitOk;
    }
    const Loaded l = load(c);
    Sink sink(c.out, out);
    *sink << dump_system(SystemFile{l.system, l.bindings});
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_workers_from_env();
    CLI::App app{"Strong H2-norm of delay differential algebraic systems"};
    app.require_subcommand(1);

    Common common;
    bool as_json = false;
    auto* check = app.add_subcommand("check", "Strong stability and feedthrough diagnostics");
    add_common(check, common);
    check->add_flag("--json", as_json, "Machine-readable report");

    auto* norm = app.add_subcommand("norm", "H2-norm of the tau discretization");
    add_common(norm, common);

    double oracle_tol = 1e-10;
    bool reflect = false;
    auto* oracle = app.add_subcommand("oracle", "H2-norm by frequency-domain quadrature");
    add_common(oracle, common);
    oracle->add_option("--tol", oracle_tol, "Relative tolerance")->check(CLI::PositiveNumber);
    oracle->add_flag("--reflect", reflect, "Reflect unstable roots (matches pole flipping)");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Convergence study over degrees");
    add_common(sweep, common);
    sweep->add_option("--degrees", sweep_args.degrees, "start:step:stop or a comma list");
    sweep->add_option("--reference", sweep_args.reference, "oracle, high or value");
    sweep->add_option("--ref-value", sweep_args.ref_value, "Reference value for --reference value");
    sweep->add_option("--tol", sweep_args.tol, "Oracle tolerance")->check(CLI::PositiveNumber);
    sweep->add_option("--high-degree", sweep_args.high_degree, "Degree for --reference high");
    sweep->add_flag("--serial", sweep_args.serial, "Evaluate degrees sequentially");

    std::string grad_params;
    double grad_step = 1e-6;
    auto* grad = app.add_subcommand("grad", "Analytic gradient against finite differences");
    add_common(grad, common);
    grad->add_option("--params", grad_params, "Comma-separated parameter names (default all)");
    grad->add_option("--step", grad_step, "Relative finite-difference step")->check(CLI::PositiveNumber);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Gradient-based H2-optimal synthesis");
    add_common(synth, common);
    synth->add_option("--free", synth_args.free, "Comma-separated parameters to optimize");
    synth->add_option("--max-iters", synth_args.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
    synth->add_option("--grad-tol", synth_args.grad_tol, "Gradient tolerance")->check(CLI::PositiveNumber);
    synth->add_option("--trace", synth_args.trace, "Trace CSV output");
    synth->add_option("--save-system", synth_args.save_system, "Write the optimized system file");

    bool list = false;
    auto* example = app.add_subcommand("example", "Print a built-in example as a system file");
    add_common(example, common, false);
    example->add_flag("--list", list, "List example tags");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*check) return cmd_check(common, as_json, out);
        if (*norm) return cmd_norm(common, out, err);
        if (*oracle) return cmd_oracle(common, oracle_tol, reflect, out, err);
        if (*sweep) return cmd_sweep(common, sweep_args, out, err);
        if (*grad) return cmd_grad(common, grad_params, grad_step, out, err);
        if (*synth) return cmd_synth(common, synth_args, out, err);
        if (*example) return cmd_example(common, list, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitInput;
}

}  // namespace tauh2

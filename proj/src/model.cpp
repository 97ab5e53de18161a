#include "tauh2/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "tauh2/error.hpp"

namespace tauh2 {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw Error(ErrorKind::InvalidInput, what);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix& target_matrix(DdaeSystem& sys, const MatrixTarget& t) {
    switch (t.kind) {
        case MatrixKind::A: return sys.A[static_cast<std::size_t>(t.delay_index)];
        case MatrixKind::B: return sys.B;
        case MatrixKind::C: return sys.C;
    }
    return sys.B;
}

const Matrix& target_matrix(const DdaeSystem& sys, const MatrixTarget& t) {
    return target_matrix(const_cast<DdaeSystem&>(sys), t);
}

std::string describe(const MatrixTarget& t) {
    std::ostringstream os;
    switch (t.kind) {
        case MatrixKind::A: os << "A" << t.delay_index; break;
        case MatrixKind::B: os << "B"; break;
        case MatrixKind::C: os << "C"; break;
    }
    os << "[" << t.row << "," << t.col << "]";
    return os.str();
}

}  // namespace

void DdaeSystem::validate() const {
    const Index dim = E.rows();
    require(dim >= 1, "system must have at least one state");
    require(E.cols() == dim, "E must be square");
    require(A.size() == delays.size() + 1,
            "expected one A matrix per delay plus the undelayed A0");
    for (std::size_t k = 0; k < A.size(); ++k) {
        require(A[k].rows() == dim && A[k].cols() == dim,
                "A" + std::to_string(k) + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
        require(all_finite(A[k]), "A" + std::to_string(k) + " has non-finite entries");
    }
    require(B.rows() == dim && B.cols() >= 1, "B must have n rows and at least one column");
    require(C.cols() == dim && C.rows() >= 1, "C must have n columns and at least one row");
    require(all_finite(E) && all_finite(B) && all_finite(C), "system matrices have non-finite entries");
    for (std::size_t k = 0; k < delays.size(); ++k) {
        if (!std::isfinite(delays[k]) || delays[k] <= 0.0) {
            throw Error(ErrorKind::OrderingViolation,
                        "delay tau_" + std::to_string(k + 1) + " must be positive and finite");
        }
        if (k > 0 && !(delays[k] > delays[k - 1])) {
            throw Error(ErrorKind::OrderingViolation, "delays must be strictly increasing (tau_" +
                                                          std::to_string(k) + " >= tau_" +
                                                          std::to_string(k + 1) + ")");
        }
    }
}

CMatrix transfer_function(const DdaeSystem& sys, Complex s) {
    CMatrix M = s * sys.E.cast<Complex>() - sys.A[0].cast<Complex>();
    for (int k = 1; k <= sys.m(); ++k) {
        M -= std::exp(-s * sys.delays[static_cast<std::size_t>(k - 1)]) *
             sys.A[static_cast<std::size_t>(k)].cast<Complex>();
    }
    Eigen::PartialPivLU<CMatrix> lu(M);
    if (!(lu.rcond() > 1e-14)) {
        throw Error(ErrorKind::CharacteristicRoot, "characteristic matrix is singular at the query point");
    }
    return sys.C.cast<Complex>() * lu.solve(sys.B.cast<Complex>());
}

TransferEvaluator::TransferEvaluator(const DdaeSystem& sys)
    : E_(sys.E.cast<Complex>()), B_(sys.B.cast<Complex>()), C_(sys.C.cast<Complex>()), delays_(sys.delays) {
    for (const auto& a : sys.A) A_.push_back(a.cast<Complex>());
}

CMatrix TransferEvaluator::operator()(Complex s) const {
    CMatrix M = s * E_ - A_[0];
    for (std::size_t k = 1; k < A_.size(); ++k) M -= std::exp(-s * delays_[k - 1]) * A_[k];
    Eigen::PartialPivLU<CMatrix> lu(M);
    if (!(lu.rcond() > 1e-14)) {
        throw Error(ErrorKind::CharacteristicRoot, "characteristic matrix is singular at the query point");
    }
    return C_ * lu.solve(B_);
}

void check_bindings(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings) {
    std::set<std::tuple<int, int, Index, Index>> seen_entries;
    std::set<int> seen_delays;
    std::set<std::string> names;
    for (const auto& b : bindings) {
        require(!b.name.empty(), "parameter binding without a name");
        require(names.insert(b.name).second, "duplicate parameter name '" + b.name + "'");
        if (b.bounds) require(b.bounds->first <= b.bounds->second, "parameter '" + b.name + "' has empty bounds");
        for (const auto& target : b.targets) {
            if (const auto* mt = std::get_if<MatrixTarget>(&target)) {
                if (mt->kind == MatrixKind::A) {
                    require(mt->delay_index >= 0 && mt->delay_index <= sys.m(),
                            "parameter '" + b.name + "' targets a nonexistent A matrix");
                }
                const Matrix& M = target_matrix(sys, *mt);
                require(mt->row >= 0 && mt->row < M.rows() && mt->col >= 0 && mt->col < M.cols(),
                        "parameter '" + b.name + "' target " + describe(*mt) + " out of range");
                require(std::isfinite(mt->coefficient), "parameter '" + b.name + "' has a non-finite coefficient");
                const int kind = static_cast<int>(mt->kind);
                const int k = mt->kind == MatrixKind::A ? mt->delay_index : 0;
                require(seen_entries.insert({kind, k, mt->row, mt->col}).second,
                        "entry " + describe(*mt) + " is bound more than once");
            } else {
                const auto& dt = std::get<DelayTarget>(target);
                require(dt.delay_index >= 1 && dt.delay_index <= sys.m(),
                        "parameter '" + b.name + "' targets a nonexistent delay");
                require(seen_delays.insert(dt.delay_index).second,
                        "delay tau_" + std::to_string(dt.delay_index) + " is bound more than once");
            }
        }
    }
}

DdaeSystem apply_parameters(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings,
                            const std::vector<double>& values) {
    require(values.size() == bindings.size(), "one value per parameter binding expected");
    check_bindings(sys, bindings);
    DdaeSystem out = sys;
    for (std::size_t j = 0; j < bindings.size(); ++j) {
        for (const auto& target : bindings[j].targets) {
            if (const auto* mt = std::get_if<MatrixTarget>(&target)) {
                target_matrix(out, *mt)(mt->row, mt->col) = mt->coefficient * values[j];
            } else {
                out.delays[static_cast<std::size_t>(std::get<DelayTarget>(target).delay_index - 1)] = values[j];
            }
        }
    }
    out.validate();
    return out;
}

DdaeSystem apply_parameters(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings) {
    std::vector<double> values;
    values.reserve(bindings.size());
    for (const auto& b : bindings) values.push_back(b.value);
    return apply_parameters(sys, bindings, values);
}

std::vector<double> read_parameters(const DdaeSystem& sys, const std::vector<ParameterBinding>& bindings) {
    std::vector<double> values;
    values.reserve(bindings.size());
    for (const auto& b : bindings) {
        double v = b.value;
        bool found = false;
        for (const auto& target : b.targets) {
            if (const auto* dt = std::get_if<DelayTarget>(&target)) {
                v = sys.delays[static_cast<std::size_t>(dt->delay_index - 1)];
                found = true;
                break;
            }
        }
        if (!found) {
            for (const auto& target : b.targets) {
                const auto& mt = std::get<MatrixTarget>(target);
                if (mt.coefficient != 0.0) {
                    v = target_matrix(sys, mt)(mt.row, mt.col) / mt.coefficient;
                    break;
                }
            }
        }
        values.push_back(v);
    }
    return values;
}

std::optional<std::size_t> find_binding(const std::vector<ParameterBinding>& bindings,
                                        const std::string& name) {
    for (std::size_t j = 0; j < bindings.size(); ++j) {
        if (bindings[j].name == name) return j;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Example corpus

namespace {

const std::array<std::pair<ExampleTag, const char*>, 7> kTags{{
    {ExampleTag::ConvSys, "conv-sys"},
    {ExampleTag::IntroFeedthrough, "intro-feedthrough"},
    {ExampleTag::Rdde1, "rdde-1"},
    {ExampleTag::Rdde2, "rdde-2"},
    {ExampleTag::Rdde3, "rdde-3"},
    {ExampleTag::Ndde1, "ndde-1"},
    {ExampleTag::Ndde2, "ndde-2"},
}};

ParameterBinding entry_param(std::string name, double value, MatrixKind kind, int k, Index row, Index col,
                             double coefficient = 1.0) {
    ParameterBinding b;
    b.name = std::move(name);
    b.value = value;
    b.targets.push_back(MatrixTarget{kind, k, row, col, coefficient});
    return b;
}

ParameterBinding delay_param(std::string name, double value, int k) {
    ParameterBinding b;
    b.name = std::move(name);
    b.value = value;
    b.targets.push_back(DelayTarget{k});
    b.bounds = std::make_pair(0.0, std::numeric_limits<double>::infinity());
    return b;
}

Matrix mat(Index rows, Index cols, std::initializer_list<double> values) {
    Matrix M(rows, cols);
    auto it = values.begin();
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) M(i, j) = *it++;
    return M;
}

Example conv_sys(const std::array<int, 4>& delta) {
    Example ex;
    ex.tag = "conv-sys";
    auto& sys = ex.system;
    sys.E = Matrix::Zero(4, 4);
    sys.E.block(0, 0, 2, 2).setIdentity();
    sys.E.block(2, 0, 2, 2).setIdentity();

    Matrix A0 = Matrix::Zero(4, 4);
    A0.block(0, 0, 2, 2) = mat(2, 2, {-5, 1, 3, 8});
    A0.block(2, 2, 2, 2).setIdentity();
    sys.A.push_back(A0);

    const auto [r1, r2, n1, n2] = delta;
    if (r1 || n1) {
        Matrix A = Matrix::Zero(4, 4);
        A.block(0, 0, 2, 2) = r1 * mat(2, 2, {-2, 0, -2, 1});
        A.block(0, 2, 2, 2) = n1 * mat(2, 2, {-0.2, 0.1, 0, -0.1});
        sys.A.push_back(A);
        sys.delays.push_back(1.0);
    }
    if (r2 || n2) {
        Matrix A = Matrix::Zero(4, 4);
        A.block(0, 0, 2, 2) = -r2 * Matrix::Identity(2, 2);
        A.block(0, 2, 2, 2) = -0.1 * n2 * Matrix::Identity(2, 2);
        sys.A.push_back(A);
        sys.delays.push_back(1.9);
    }
    sys.B = mat(4, 1, {1, 1, 0, 0});
    sys.C = mat(1, 4, {1, 1, 0, 0});
    return ex;
}

Example intro_feedthrough(const std::array<double, 3>& taus) {
    Example ex;
    ex.tag = "intro-feedthrough";
    auto& sys = ex.system;
    sys.E = Matrix::Zero(4, 4);
    sys.A.push_back(Matrix::Identity(4, 4));

    std::array<Matrix, 3> delayed;
    for (auto& M : delayed) M = Matrix::Zero(4, 4);
    delayed[0](0, 2) = -1.0;
    delayed[1](2, 3) = -1.0;
    delayed[2](1, 3) = -1.0;

    // Sort the three delays, carrying their coefficient matrices along.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return taus[a] < taus[b]; });
    for (int j : order) {
        sys.A.push_back(delayed[static_cast<std::size_t>(j)]);
        sys.delays.push_back(taus[static_cast<std::size_t>(j)]);
    }
    sys.B = mat(4, 1, {0, 0, 0, -1});
    sys.C = mat(1, 4, {1, 1, 0, 0});
    return ex;
}

Example rdde1() {
    Example ex;
    ex.tag = "rdde-1";
    auto& sys = ex.system;
    sys.E = Matrix::Identity(4, 4);
    sys.E(3, 3) = 0.0;
    sys.A.push_back(mat(4, 4, {-0.08, -0.03, 0.2, 0,    //
                               0.2, -0.04, -0.005, 0,   //
                               -0.06, -0.2, -0.07, 0,   //
                               0.472, 0.505, 0.603, -1}));
    sys.A.push_back(mat(4, 4, {0, 0, 0, -0.1,  //
                               0, 0, 0, -0.2,  //
                               0, 0, 0, 0.1,   //
                               0, 0, 0, 0}));
    sys.delays = {5.0};
    sys.B = Matrix::Zero(4, 3);
    sys.B.topRows(3).setIdentity();
    sys.C = Matrix::Zero(3, 4);
    sys.C.leftCols(3).setIdentity();
    ex.bindings = {entry_param("p1", 0.472, MatrixKind::A, 0, 3, 0),
                   entry_param("p2", 0.505, MatrixKind::A, 0, 3, 1),
                   entry_param("p3", 0.603, MatrixKind::A, 0, 3, 2)};
    ex.default_free = {"p1", "p2", "p3"};
    return ex;
}

Example rdde2() {
    constexpr double nu = 17.6;
    constexpr double zeta = 0.0128;
    constexpr double b = 31.0;
    constexpr double kp = 22.57;
    constexpr double kr = 3.0;
    constexpr double tau = 0.03;

    Example ex;
    ex.tag = "rdde-2";
    auto& sys = ex.system;
    sys.E = Matrix::Identity(3, 3);
    sys.E(2, 2) = 0.0;
    sys.A.push_back(mat(3, 3, {0, 1, 0,                        //
                               -nu * nu, -2 * zeta * nu, b,    //
                               -kp, 0, -1}));
    sys.A.push_back(mat(3, 3, {0, 0, 0, 0, 0, 0, kr, 0, 0}));
    sys.delays = {tau};
    sys.B = mat(3, 1, {0, b, 0});
    sys.C = mat(1, 3, {1, 0, 0});
    ex.bindings = {delay_param("tau", tau, 1),
                   entry_param("k_p", kp, MatrixKind::A, 0, 2, 0, -1.0),
                   entry_param("k_r", kr, MatrixKind::A, 1, 2, 0)};
    ex.default_free = {"tau", "k_r"};
    return ex;
}

Example rdde3() {
    Example ex;
    ex.tag = "rdde-3";

    DdaeSystem full;
    full.E = Matrix::Identity(4, 4);
    full.A.push_back(mat(4, 4, {-4.93, -1.01, 0, 0,       //
                                -3.20, -5.30, -12.8, 0,   //
                                6.40, 0.347, -32.5, -1.04,  //
                                0, 0.833, 11, -3.96}));
    full.A.push_back(mat(4, 4, {1.92, 0, 0, 0, 0, 1.92, 0, 0, 0, 0, 1.87, 0, 0, 0, 0, 0.724}));
    full.delays = {0.1};
    full.B = mat(4, 2, {1, 0, 0, 1, 0, 0, 0, 0});
    full.C = mat(1, 4, {1, 1, 1, 1});

    DdaeSystem reduced;
    reduced.E = Matrix::Identity(2, 2);
    reduced.A.push_back(mat(2, 2, {-3, -1, -3, -2}));
    reduced.A.push_back(mat(2, 2, {1, 0, 2, 0}));
    reduced.delays = {0.1};
    reduced.B = mat(2, 2, {1.6, 0.3, 0.15, 0.7});
    reduced.C = mat(1, 2, {0.7, -0.7});

    ex.system = error_system(full, reduced);
    const Index off = full.n();
    auto add = [&](const std::string& prefix, MatrixKind kind, int k, const Matrix& M, Index row0, Index col0,
                   double coeff) {
        for (Index i = 0; i < M.rows(); ++i) {
            for (Index j = 0; j < M.cols(); ++j) {
                const std::string name = prefix + "_" + std::to_string(i + 1) + std::to_string(j + 1);
                ex.bindings.push_back(entry_param(name, M(i, j), kind, k, row0 + i, col0 + j, coeff));
                ex.default_free.push_back(name);
            }
        }
    };
    add("a0r", MatrixKind::A, 0, reduced.A[0], off, off, 1.0);
    add("a1r", MatrixKind::A, 1, reduced.A[1], off, off, 1.0);
    add("br", MatrixKind::B, 0, reduced.B, off, 0, 1.0);
    add("cr", MatrixKind::C, 0, reduced.C, 0, off, -1.0);
    return ex;
}

Example ndde1() {
    Example ex;
    ex.tag = "ndde-1";
    auto& sys = ex.system;
    sys.E = mat(3, 3, {1, 0, 0, 1, 0, 0, 0, 0, 0});
    sys.A.push_back(mat(3, 3, {-1, 0, 1, 0, 1, 0, 0, 0, -1}));
    sys.A.push_back(mat(3, 3, {1, 0, 0, 0, 0, 0, -1, 0, 0}));
    sys.delays = {1.0};
    sys.B = mat(3, 1, {0, 0, 1});
    sys.C = mat(1, 3, {1, 0, 0});
    ex.bindings = {entry_param("p1", 0.0, MatrixKind::A, 1, 2, 1),
                   entry_param("p2", -1.0, MatrixKind::A, 1, 2, 0)};
    ex.default_free = {"p1", "p2"};
    return ex;
}

Example ndde2() {
    constexpr double xi = 0.2;
    constexpr double p1 = 0.5;
    constexpr double p2 = -20.0;

    Example ex;
    ex.tag = "ndde-2";
    auto& sys = ex.system;
    sys.E = Matrix::Zero(5, 5);
    sys.E(0, 1) = 1.0;
    sys.E(1, 0) = 1.0;
    sys.E(2, 1) = 1.0;
    sys.A.push_back(mat(5, 5, {-1, -2 * xi, 0, p1, p2,  //
                               0, 1, 0, 0, 0,           //
                               0, 0, 1, 0, 0,           //
                               0, 0, 0, -1, 0,          //
                               0, 0, 0, 0, -1}));
    // Delays are stored sorted: tau_2 = 0.1 (derivative feedback) comes first.
    Matrix Ad = Matrix::Zero(5, 5);
    Ad(4, 1) = 1.0;
    sys.A.push_back(Ad);
    Matrix Aa = Matrix::Zero(5, 5);
    Aa(3, 2) = 1.0;
    sys.A.push_back(Aa);
    sys.delays = {0.1, 0.2};
    sys.B = Matrix::Zero(5, 2);
    sys.B(3, 0) = 1.0;
    sys.B(4, 1) = 1.0;
    sys.C = mat(1, 5, {1, 0, 0, 0, 0});

    auto tau1 = delay_param("tau1", 0.2, 2);
    tau1.bounds = std::make_pair(0.1, std::numeric_limits<double>::infinity());
    ex.bindings = {entry_param("p1", p1, MatrixKind::A, 0, 0, 3),
                   entry_param("p2", p2, MatrixKind::A, 0, 0, 4), tau1, delay_param("tau2", 0.1, 1)};
    ex.default_free = {"p2"};
    return ex;
}

}  // namespace

ExampleTag parse_example_tag(const std::string& tag) {
    for (const auto& [t, name] : kTags) {
        if (tag == name) return t;
    }
    throw Error(ErrorKind::InvalidInput, "unknown example tag '" + tag + "'");
}

std::string to_string(ExampleTag tag) {
    for (const auto& [t, name] : kTags) {
        if (t == tag) return name;
    }
    return "unknown";
}

std::vector<std::string> example_tags() {
    std::vector<std::string> out;
    for (const auto& entry : kTags) out.emplace_back(entry.second);
    return out;
}

std::array<int, 4> parse_delta(const std::vector<int>& delta) {
    require(delta.size() == 4, "conv-sys expects a delta vector of length 4");
    std::array<int, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        require(delta[i] == 0 || delta[i] == 1, "delta entries must be 0 or 1");
        out[i] = delta[i];
    }
    return out;
}

Example build_example(const ExampleId& id) {
    Example ex;
    switch (id.tag) {
        case ExampleTag::ConvSys:
            for (int d : id.delta) require(d == 0 || d == 1, "delta entries must be 0 or 1");
            ex = conv_sys(id.delta);
            break;
        case ExampleTag::IntroFeedthrough: ex = intro_feedthrough(id.intro_delays); break;
        case ExampleTag::Rdde1: ex = rdde1(); break;
        case ExampleTag::Rdde2: ex = rdde2(); break;
        case ExampleTag::Rdde3: ex = rdde3(); break;
        case ExampleTag::Ndde1: ex = ndde1(); break;
        case ExampleTag::Ndde2: ex = ndde2(); break;
    }
    ex.system.validate();
    check_bindings(ex.system, ex.bindings);
    return ex;
}

DdaeSystem error_system(const DdaeSystem& full, const DdaeSystem& reduced) {
    full.validate();
    reduced.validate();
    require(full.delays == reduced.delays, "full and reduced model must share their delays");
    require(full.p() == reduced.p() && full.q() == reduced.q(), "full and reduced model must share input/output sizes");
    const Index n1 = full.n();
    const Index n2 = reduced.n();
    auto blkdiag = [&](const Matrix& X, const Matrix& Y) {
        Matrix M = Matrix::Zero(n1 + n2, n1 + n2);
        M.topLeftCorner(n1, n1) = X;
        M.bottomRightCorner(n2, n2) = Y;
        return M;
    };
    DdaeSystem e;
    e.E = blkdiag(full.E, reduced.E);
    for (std::size_t k = 0; k < full.A.size(); ++k) e.A.push_back(blkdiag(full.A[k], reduced.A[k]));
    e.delays = full.delays;
    e.B.resize(n1 + n2, full.p());
    e.B << full.B, reduced.B;
    e.C.resize(full.q(), n1 + n2);
    e.C << full.C, -reduced.C;
    return e;
}

}  // namespace tauh2

#include "tauh2/system_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tauh2/error.hpp"

namespace tauh2 {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::InvalidInput, what); }

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) fail(where + ": missing field '" + key + "'");
    return obj.at(key);
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where + ": expected a number");
    return v.get<double>();
}

Matrix matrix(const json& v, Index rows, Index cols, const std::string& where) {
    if (!v.is_array() || static_cast<Index>(v.size()) != rows) {
        fail(where + ": expected " + std::to_string(rows) + " rows");
    }
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            fail(where + " row " + std::to_string(i) + ": expected " + std::to_string(cols) + " entries");
        }
        for (Index j = 0; j < cols; ++j) {
            M(i, j) = number(row[static_cast<std::size_t>(j)], where + "[" + std::to_string(i) + "][" +
                                                                    std::to_string(j) + "]");
        }
    }
    return M;
}

json to_json(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where + ": expected an integer");
    return v.get<int>();
}

ParameterBinding binding(const json& v, const std::string& where) {
    ParameterBinding b;
    const json& name = field(v, "name", where);
    if (!name.is_string()) fail(where + ".name: expected a string");
    b.name = name.get<std::string>();
    b.value = number(field(v, "value", where), where + ".value");
    if (v.contains("bounds") && !v.at("bounds").is_null()) {
        const json& bd = v.at("bounds");
        if (!bd.is_array() || bd.size() != 2) fail(where + ".bounds: expected [lo, hi]");
        const double inf = std::numeric_limits<double>::infinity();
        const double lo = bd[0].is_null() ? -inf : number(bd[0], where + ".bounds[0]");
        const double hi = bd[1].is_null() ? inf : number(bd[1], where + ".bounds[1]");
        b.bounds = std::make_pair(lo, hi);
    }
    const json& targets = field(v, "targets", where);
    if (!targets.is_array() || targets.empty()) fail(where + ".targets: expected a nonempty array");
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const json& tj = targets[t];
        const std::string tw = where + ".targets[" + std::to_string(t) + "]";
        if (tj.contains("delay")) {
            b.targets.emplace_back(DelayTarget{integer(tj.at("delay"), tw + ".delay")});
            continue;
        }
        MatrixTarget mt;
        const json& kind = field(tj, "matrix", tw);
        const std::string k = kind.is_string() ? kind.get<std::string>() : "";
        if (k == "A") {
            mt.kind = MatrixKind::A;
            mt.delay_index = integer(field(tj, "delay_index", tw), tw + ".delay_index");
        } else if (k == "B") {
            mt.kind = MatrixKind::B;
        } else if (k == "C") {
            mt.kind = MatrixKind::C;
        } else {
            fail(tw + ".matrix: expected \"A\", \"B\" or \"C\"");
        }
        mt.row = integer(field(tj, "row", tw), tw + ".row");
        mt.col = integer(field(tj, "col", tw), tw + ".col");
        if (tj.contains("coefficient")) mt.coefficient = number(tj.at("coefficient"), tw + ".coefficient");
        b.targets.emplace_back(mt);
    }
    return b;
}

}  // namespace

SystemFile parse_system(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        fail("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
             e.what());
    }
    if (!doc.is_object()) fail("system file: expected a JSON object");

    SystemFile out;
    DdaeSystem& sys = out.system;
    const int n = integer(field(doc, "n", "system"), "n");
    const int p = integer(field(doc, "p", "system"), "p");
    const int q = integer(field(doc, "q", "system"), "q");
    if (n < 1 || p < 1 || q < 1) fail("system: n, p and q must be positive");

    if (doc.contains("delays")) {
        const json& d = doc.at("delays");
        if (!d.is_array()) fail("delays: expected an array");
        for (std::size_t k = 0; k < d.size(); ++k) sys.delays.push_back(number(d[k], "delays[" + std::to_string(k) + "]"));
    }
    sys.E = matrix(field(doc, "E", "system"), n, n, "E");
    sys.A.assign(sys.delays.size() + 1, Matrix::Zero(n, n));
    std::vector<bool> seen(sys.A.size(), false);
    const json& A = field(doc, "A", "system");
    if (!A.is_array()) fail("A: expected an array of {delay_index, matrix}");
    for (std::size_t i = 0; i < A.size(); ++i) {
        const std::string where = "A[" + std::to_string(i) + "]";
        const int k = integer(field(A[i], "delay_index", where), where + ".delay_index");
        if (k < 0 || k > static_cast<int>(sys.delays.size())) fail(where + ".delay_index out of range");
        if (seen[static_cast<std::size_t>(k)]) fail(where + ": delay index " + std::to_string(k) + " repeated");
        seen[static_cast<std::size_t>(k)] = true;
        sys.A[static_cast<std::size_t>(k)] = matrix(field(A[i], "matrix", where), n, n, where + ".matrix");
    }
    sys.B = matrix(field(doc, "B", "system"), n, p, "B");
    sys.C = matrix(field(doc, "C", "system"), q, n, "C");
    sys.validate();

    if (doc.contains("parameters")) {
        const json& ps = doc.at("parameters");
        if (!ps.is_array()) fail("parameters: expected an array");
        for (std::size_t j = 0; j < ps.size(); ++j) {
            out.bindings.push_back(binding(ps[j], "parameters[" + std::to_string(j) + "]"));
        }
        check_bindings(sys, out.bindings);
        out.system = apply_parameters(sys, out.bindings);
    }
    return out;
}

SystemFile load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open system file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_system(ss.str());
}

std::string dump_system(const SystemFile& file) {
    const DdaeSystem& sys = file.system;
    json doc;
    doc["n"] = sys.n();
    doc["p"] = sys.p();
    doc["q"] = sys.q();
    doc["E"] = to_json(sys.E);
    doc["A"] = json::array();
    for (std::size_t k = 0; k < sys.A.size(); ++k) {
        doc["A"].push_back({{"delay_index", k}, {"matrix", to_json(sys.A[k])}});
    }
    doc["B"] = to_json(sys.B);
    doc["C"] = to_json(sys.C);
    doc["delays"] = sys.delays;
    json ps = json::array();
    for (const auto& b : file.bindings) {
        json bj{{"name", b.name}, {"value", b.value}};
        if (b.bounds) {
            auto bound = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
            bj["bounds"] = json::array({bound(b.bounds->first), bound(b.bounds->second)});
        }
        json ts = json::array();
        for (const auto& t : b.targets) {
            if (const auto* dt = std::get_if<DelayTarget>(&t)) {
                ts.push_back({{"delay", dt->delay_index}});
            } else {
                const auto& mt = std::get<MatrixTarget>(t);
                json tj{{"matrix", mt.kind == MatrixKind::A ? "A" : mt.kind == MatrixKind::B ? "B" : "C"},
                        {"row", mt.row},
                        {"col", mt.col},
                        {"coefficient", mt.coefficient}};
                if (mt.kind == MatrixKind::A) tj["delay_index"] = mt.delay_index;
                ts.push_back(tj);
            }
        }
        bj["targets"] = ts;
        ps.push_back(bj);
    }
    doc["parameters"] = ps;
    return doc.dump(2) + "\n";
}

void save_system(const std::string& path, const SystemFile& file) {
    std::ofstream out(path);
    if (!out) fail("cannot write system file '" + path + "'");
    out << dump_system(file);
}

}  // namespace tauh2

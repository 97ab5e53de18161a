#pragma once

#include <string>
#include <vector>

#include "tauh2/model.hpp"

namespace tauh2 {

/// A system description file: the system plus its parameter bindings.
///
/// Schema (JSON):
///
///     {
///       "n": 2, "p": 1, "q": 1,
///       "E": [[1, 0], [0, 1]],
///       "A": [{"delay_index": 0, "matrix": [[-1, 0], [0, -2]]},
///             {"delay_index": 1, "matrix": [[0, 0.5], [0, 0]]}],
///       "B": [[1], [0]],
///       "C": [[1, 1]],
///       "delays": [1.0],
///       "parameters": [
///         {"name": "k", "value": 0.5, "bounds": [0, null],
///          "targets": [{"matrix": "A", "delay_index": 1, "row": 0, "col": 1, "coefficient": 1}]},
///         {"name": "tau", "value": 1.0, "targets": [{"delay": 1}]}
///       ]
///     }
///
/// Matrices are row-major nested arrays. `delay_index` 0 is the undelayed
/// matrix; missing delay indices are zero matrices. Row and column indices are
/// zero-based, delay targets one-based. A null bound is unbounded.
struct SystemFile {
    DdaeSystem system;
    std::vector<ParameterBinding> bindings;
};

/// Throws InvalidInput. Syntax errors name the line and column.
SystemFile parse_system(const std::string& text);
SystemFile load_system(const std::string& path);

std::string dump_system(const SystemFile& file);
void save_system(const std::string& path, const SystemFile& file);

}  // namespace tauh2

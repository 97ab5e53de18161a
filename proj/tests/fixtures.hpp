#pragma once

#include <initializer_list>
#include <random>

#include "tauh2/model.hpp"

namespace fixtures {

using tauh2::DdaeSystem;
using tauh2::Index;
using tauh2::Matrix;

inline Matrix mat(Index rows, Index cols, std::initializer_list<double> values) {
    Matrix M(rows, cols);
    auto it = values.begin();
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) M(i, j) = *it++;
    return M;
}

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

/// x' = a x + v, z = c x.
inline DdaeSystem scalar_ode(double a, double c = 1.0) {
    DdaeSystem s;
    s.E = scalar(1.0);
    s.A = {scalar(a)};
    s.B = scalar(1.0);
    s.C = scalar(c);
    return s;
}

/// x' = a0 x + a1 x(t - tau) + v, z = x.
inline DdaeSystem scalar_dde(double a0, double a1, double tau) {
    DdaeSystem s = scalar_ode(a0);
    s.A.push_back(scalar(a1));
    s.delays = {tau};
    return s;
}

inline Matrix random_matrix(std::mt19937& rng, Index rows, Index cols, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) M(i, j) = u(rng);
    return M;
}

}  // namespace fixtures

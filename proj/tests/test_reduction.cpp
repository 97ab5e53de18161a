#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "tauh2/discretization.hpp"
#include "tauh2/error.hpp"
#include "tauh2/reduction.hpp"

using namespace tauh2;
using fixtures::mat;

namespace {

DdaeSystem ndde1() { return build_example({ExampleTag::Ndde1}).system; }

// Sorted eigenvalues compared by nearest match.
double spectrum_distance(const CVector& a, const CVector& b) {
    double worst = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        double best = 1e300;
        for (Index j = 0; j < b.size(); ++j) best = std::min(best, std::abs(a(i) - b(j)) / std::max(1.0, std::abs(a(i))));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

TEST_SUITE("reduction") {

TEST_CASE("index check examples") {
    DdaeSystem s;
    s.B = Matrix::Ones(2, 1);
    s.C = Matrix::Ones(1, 2);

    s.E = Matrix::Identity(2, 2);
    s.A = {Matrix::Identity(2, 2)};
    IndexVerdict v = index_check(s);
    CHECK(v.index_at_most_one);
    CHECK(v.nu == 0);

    s.E = Matrix::Zero(2, 2);
    v = index_check(s);
    CHECK(v.index_at_most_one);
    CHECK(v.nu == 2);

    s.E = mat(2, 2, {1, 0, 1, 0});
    s.A = {mat(2, 2, {0, 0, 0, 1})};
    v = index_check(s);
    CHECK(v.index_at_most_one);
    CHECK(v.nu == 1);
    CHECK(v.smallest_singular_value == doctest::Approx(1.0 / std::sqrt(2.0)));

    s.E = mat(2, 2, {1, 0, 0, 0});
    s.A = {mat(2, 2, {0, 1, 1, 0})};
    v = index_check(s);
    CHECK_FALSE(v.index_at_most_one);
    try {
        standard_form(s);
        FAIL("expected an index error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IndexError);
    }
}

TEST_CASE("standard form normalization and reassembly") {
    for (ExampleTag tag : {ExampleTag::Rdde1, ExampleTag::Rdde2, ExampleTag::Ndde1, ExampleTag::Ndde2,
                           ExampleTag::IntroFeedthrough, ExampleTag::ConvSys}) {
        const DdaeSystem s = build_example({tag}).system;
        const StandardForm sf = standard_form(s);
        if (sf.nu > 0) CHECK((sf.A22[0] + Matrix::Identity(sf.nu, sf.nu)).norm() < 1e-12);
        const Index r = s.n() - sf.nu;
        Matrix L(s.n(), s.n()), R(s.n(), s.n());
        L << sf.Ubar_perp, sf.Ubar;
        R << sf.Vbar_perp, sf.Vbar;
        CHECK((sf.Ubar_perp * s.E * sf.Vbar_perp - Matrix::Identity(r, r)).norm() < 1e-12);
        for (std::size_t k = 0; k < s.A.size(); ++k) {
            Matrix blocks(s.n(), s.n());
            blocks << sf.A11[k], sf.A12[k], sf.A21[k], sf.A22[k];
            const Matrix back = L.inverse() * blocks * R.inverse();
            CHECK((back - s.A[k]).norm() < 1e-12 * (1.0 + s.A[k].norm()));
        }
        Matrix Bb(s.n(), s.p()), Cb(s.q(), s.n());
        Bb << sf.B1, sf.B2;
        Cb << sf.C1, sf.C2;
        CHECK((L.inverse() * Bb - s.B).norm() < 1e-12 * (1.0 + s.B.norm()));
        CHECK((Cb * R.inverse() - s.C).norm() < 1e-12 * (1.0 + s.C.norm()));
    }
}

TEST_CASE("retarded system has no algebraic part") {
    const DdaeSystem s = fixtures::scalar_dde(-2.0, -1.0, 1.0);
    const StandardForm sf = standard_form(s);
    CHECK(sf.nu == 0);
    const ReducedOde r = split_and_reduce(discretize(s, 10));
    CHECK(r.order() == 11);
    CHECK(r.D.norm() == 0.0);
}

TEST_CASE("intro-feedthrough is fully algebraic") {
    const DdaeSystem s = build_example({ExampleTag::IntroFeedthrough}).system;
    const StandardForm sf = standard_form(s);
    CHECK(sf.nu == 4);
    // Only the phi_N block is algebraic in the discretization.
    const ReducedOde r = split_and_reduce(discretize(s, 10));
    CHECK(r.order() == 4 * 10);
}

TEST_CASE("neutral example has no feedthrough after reduction") {
    const ReducedOde r = split_and_reduce(discretize(ndde1(), 20));
    CHECK(r.D.norm() < 1e-10);
}

DdaeSystem random_ddae(unsigned seed) {
    std::mt19937 rng(seed);
    DdaeSystem s;
    s.E = Matrix::Identity(4, 4);
    s.E(3, 3) = 0.0;
    s.A = {fixtures::random_matrix(rng, 4, 4) - 2.0 * Matrix::Identity(4, 4), fixtures::random_matrix(rng, 4, 4, 0.3)};
    s.A[0](3, 3) = -1.0;
    s.delays = {0.7};
    s.B = fixtures::random_matrix(rng, 4, 2);
    s.C = fixtures::random_matrix(rng, 1, 4);
    s.C(0, 3) = 0.0;
    return s;
}

CVector reduced_spectrum(const ReducedOde& r) { return Eigen::EigenSolver<Matrix>(r.E11.lu().solve(r.A)).eigenvalues(); }

// Forward comparison, only where the eigenvector matrix is well conditioned
// (condition times eps well below 1e-8); tau discretizations quickly reach
// condition numbers of 1e12 and more as N grows.
TEST_CASE("Schur reduction keeps the finite spectrum") {
    struct Case {
        DdaeSystem sys;
        int degree;
    };
    const std::vector<Case> cases{{build_example({ExampleTag::Rdde1}).system, 6}, {build_example({ExampleTag::Rdde1}).system, 10},
                                  {build_example({ExampleTag::Rdde3}).system, 10}, {build_example({ExampleTag::Rdde2}).system, 6},
                                  {random_ddae(1), 10}, {random_ddae(2), 10}};
    for (const Case& c : cases) {
        const TauDiscretization d = discretize(c.sys, c.degree);
        const ReducedOde r = split_and_reduce(d);
        Eigen::GeneralizedEigenSolver<Matrix> ges(d.A, d.E);
        std::vector<Complex> finite;
        for (Index i = 0; i < ges.alphas().size(); ++i) {
            if (std::abs(ges.betas()(i)) > 1e-8 * std::abs(ges.alphas()(i))) finite.push_back(ges.alphas()(i) / ges.betas()(i));
        }
        const CVector reduced = reduced_spectrum(r);
        CVector full(static_cast<Index>(finite.size()));
        for (std::size_t i = 0; i < finite.size(); ++i) full(static_cast<Index>(i)) = finite[i];
        CHECK(full.size() == reduced.size());
        CHECK(spectrum_distance(reduced, full) < 1e-8);
        CHECK(spectrum_distance(full, reduced) < 1e-8);
    }
}

// Conditioning-free form: every reduced eigenvalue makes the descriptor
// pencil singular up to roundoff.
TEST_CASE("reduced eigenvalues are pencil eigenvalues in the backward sense") {
    for (ExampleTag tag : {ExampleTag::Rdde1, ExampleTag::Rdde2, ExampleTag::Ndde1, ExampleTag::Ndde2}) {
        const TauDiscretization d = discretize(build_example({tag}).system, 12);
        const CVector lam = reduced_spectrum(split_and_reduce(d));
        double worst = 0.0;
        for (Index i = 0; i < lam.size(); ++i) {
            const CMatrix M = lam(i) * d.E.cast<Complex>() - d.A.cast<Complex>();
            const double smin = Eigen::JacobiSVD<CMatrix>(M).singularValues().minCoeff();
            worst = std::max(worst, smin / (std::abs(lam(i)) * d.E.norm() + d.A.norm()));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("reduced transfer function equals the descriptor one") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (ExampleTag tag : {ExampleTag::Ndde1, ExampleTag::Ndde2, ExampleTag::Rdde1}) {
        const TauDiscretization d = discretize(build_example({tag}).system, 12);
        const ReducedOde r = split_and_reduce(d);
        for (int t = 0; t < 10; ++t) {
            const Complex s(u(rng), u(rng));
            const CMatrix full = discretized_transfer(d, s);
            const CMatrix res = (s * r.E11.cast<Complex>() - r.A.cast<Complex>()).lu().solve(r.B.cast<Complex>());
            const CMatrix red = r.C.cast<Complex>() * res + r.D.cast<Complex>();
            CHECK((full - red).norm() < 1e-9 * (1.0 + full.norm()));
        }
    }
}

// With orthonormal kernel bases U, V the block U A_N V is the weighted sum
// only up to the normalization X = U (A_0 eps_0) V, so -X^{-1} A22 is the
// matrix similar to sum_k A_{k,22} phi_N(-tau_k).
TEST_CASE("A22 is similar to the phi_N-weighted algebraic blocks") {
    for (ExampleTag tag : {ExampleTag::Ndde1, ExampleTag::Ndde2, ExampleTag::Rdde1}) {
        const DdaeSystem s = build_example({tag}).system;
        const StandardForm sf = standard_form(s);
        const int N = 11;
        const TauDiscretization d = discretize(s, N);
        const ReducedOde r = split_and_reduce(d);
        const BasisSpec b = polynomial_basis(s.delays, N);
        Matrix sum = sf.A22[0];
        for (int k = 1; k <= s.m(); ++k) sum += sf.A22[static_cast<std::size_t>(k)] * basis_values(b, -s.delays[static_cast<std::size_t>(k - 1)])(N);
        Matrix A0eps = Matrix::Zero(d.size(), d.size());
        A0eps.topRows(s.n()) = s.A[0] * eval_functional(b, 0.0, s.n());
        const Matrix X = r.U * A0eps * r.V;
        const CVector a = Eigen::EigenSolver<Matrix>(-X.lu().solve(r.A22)).eigenvalues();
        const CVector e = Eigen::EigenSolver<Matrix>(sum).eigenvalues();
        CHECK(a.size() == e.size());
        CHECK(spectrum_distance(a, e) < 1e-8);
        CHECK(spectrum_distance(e, a) < 1e-8);
    }
}

TEST_CASE("numerical rank") {
    Vector sv(3);
    sv << 2.0, 1.0, 1e-20;
    const RankInfo r = numerical_rank(sv, 3, 3);
    CHECK(r.rank == 2);
    CHECK_FALSE(r.ambiguous);
    sv(2) = 3.0 * std::numeric_limits<double>::epsilon() * 3 * 2.0;
    CHECK(numerical_rank(sv, 3, 3).ambiguous);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "tauh2/discretization.hpp"
#include "tauh2/error.hpp"

using namespace tauh2;

namespace {

DdaeSystem conv(std::array<int, 4> delta) {
    ExampleId id{ExampleTag::ConvSys};
    id.delta = delta;
    return build_example(id).system;
}

}  // namespace

TEST_SUITE("discretization") {

TEST_CASE("delay-free scalar, N = 2") {
    const TauDiscretization d = discretize(fixtures::scalar_ode(-1.0), 2);
    CHECK(d.size() == 3);
    const Matrix expected = fixtures::mat(3, 3, {1, 1, 1, 1, 0, 0, 0, 1, 0});
    CHECK((d.E - expected).norm() == 0.0);
    CHECK(d.B(0, 0) == 1.0);
}

TEST_CASE("single-delay spline equals polynomial") {
    const DdaeSystem s = fixtures::scalar_dde(-2.0, -1.0, 1.0);
    const TauDiscretization p = discretize(s, 9, Mode::Polynomial);
    const TauDiscretization q = discretize(s, 9, Mode::Spline);
    CHECK((p.E - q.E).norm() == 0.0);
    CHECK((p.A - q.A).norm() == 0.0);
    CHECK((p.B - q.B).norm() == 0.0);
    CHECK((p.C - q.C).norm() == 0.0);
    CHECK_THROWS_AS(discretize(fixtures::scalar_ode(-1.0), 4, Mode::Spline), Error);
}

TEST_CASE("spline layout: segments then continuity rows") {
    const DdaeSystem s = conv({1, 1, 0, 0});
    const int N = 5;
    const TauDiscretization d = discretize(s, N, Mode::Spline);
    CHECK(d.bases.size() == 2);
    CHECK(d.size() == 2 * s.n() * (N + 1));
    CHECK(d.bases[0].lo == doctest::Approx(-s.delays[0]));
    CHECK(d.bases[1].hi == doctest::Approx(-s.delays[0]));
    CHECK(d.bases[1].lo == doctest::Approx(-s.delays[1]));
}

TEST_CASE("rational exponential basics") {
    const std::vector<double> one{0.8};
    const Complex s(0.3, 1.7);
    CHECK(std::abs(rational_exp(one, 6, Mode::Polynomial, s, 0) - 1.0) < 1e-15);
    // N = 1 is the (1,1) Pade approximant of exp(-tau s).
    const double tau = 0.8;
    const Complex pade = (1.0 - tau * s / 2.0) / (1.0 + tau * s / 2.0);
    CHECK(std::abs(rational_exp(one, 1, Mode::Polynomial, s, 1) - pade) < 1e-14);
}

TEST_CASE("unit modulus on the imaginary axis") {
    const std::vector<double> ds{0.5, 1.2};
    for (double w : {0.1, 1.0, 10.0, 100.0}) {
        for (int N : {4, 17, 40}) {
            CHECK(std::abs(std::abs(rational_exp(ds, N, Mode::Polynomial, Complex(0, w), 2)) - 1.0) < 1e-12);
            for (int k = 1; k <= 2; ++k)
                CHECK(std::abs(std::abs(rational_exp(ds, N, Mode::Spline, Complex(0, w), k)) - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("growth of the rational exponential along the imaginary axis stays bounded") {
    const std::vector<double> ds{0.5, 1.2};
    double worst = 0.0;
    for (double w = 1.0; w <= 1e4; w *= 3.0) worst = std::max(worst, std::abs(rational_exp(ds, 20, Mode::Polynomial, Complex(0, w), 1)));
    MESSAGE("max |r_N(iw, -tau_1)| for w <= 1e4: " << worst);
    CHECK(std::isfinite(worst));
}

TEST_CASE("uniform convergence to the exponential") {
    const std::vector<double> ds{1.0};
    for (Complex s : {Complex(1, 0), Complex(0, 1), Complex(2, 3)}) {
        double prev = 1e300;
        for (int N = 10; N <= 30; N += 2) {
            double err = 0.0;
            for (int i = 0; i < 200; ++i) {
                const double th = -1.0 * i / 199.0;
                err = std::max(err, std::abs(rational_exp_at(ds, N, Mode::Polynomial, s, th) - std::exp(th * s)));
            }
            if (prev > 1e-14) CHECK(err <= prev * 1.0000001 + 1e-15);
            prev = err;
            if (N == 30) CHECK(err < 1e-10);
        }
    }
}

TEST_CASE("delay-free transfer at s = 0") {
    for (int N : {1, 5, 20}) {
        const TauDiscretization d = discretize(fixtures::scalar_ode(-1.0), N);
        CHECK(std::abs(discretized_transfer(d, 0.0)(0, 0) - 1.0) < 1e-13);
    }
}

TEST_CASE("scalar DDE transfer matches the exact one") {
    const DdaeSystem s = fixtures::scalar_dde(-2.0, -1.0, 1.0);
    const TauDiscretization d = discretize(s, 20);
    const Complex g = discretized_transfer(d, Complex(0, 1))(0, 0);
    const Complex e = transfer_function(s, Complex(0, 1))(0, 0);
    CHECK(std::abs(g - e) / std::abs(e) < 1e-8);
}

TEST_CASE("resolvent and closed form agree") {
    const DdaeSystem s = conv({0, 0, 1, 1});
    for (Mode mode : {Mode::Polynomial, Mode::Spline}) {
        const TauDiscretization d = discretize(s, 40, mode);
        const CMatrix a = discretized_transfer(d, Complex(0, 2));
        const CMatrix b = rational_transfer(s, 40, mode, Complex(0, 2));
        CHECK((a - b).norm() < 1e-10 * (1.0 + b.norm()));
    }
}

TEST_CASE("transfer converges on a compact frequency set") {
    const DdaeSystem s = conv({1, 1, 0, 0});
    double prev = 1e300;
    for (int N : {8, 16, 32}) {
        const TauDiscretization d = discretize(s, N);
        double err = 0.0;
        for (double w = -10.0; w <= 10.0; w += 0.25)
            err = std::max(err, (discretized_transfer(d, Complex(0, w)) - transfer_function(s, Complex(0, w))).norm());
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("E_N is invertible for retarded systems") {
    std::mt19937 rng(2);
    DdaeSystem s;
    s.E = Matrix::Identity(3, 3);
    s.A = {fixtures::random_matrix(rng, 3, 3), fixtures::random_matrix(rng, 3, 3), fixtures::random_matrix(rng, 3, 3)};
    s.delays = {0.4, 1.1};
    s.B = fixtures::random_matrix(rng, 3, 1);
    s.C = fixtures::random_matrix(rng, 1, 3);
    // Polynomial mode only: spline continuity rows are algebraic.
    const TauDiscretization d = discretize(s, 15);
    Eigen::FullPivLU<Matrix> lu(d.E);
    CHECK(lu.isInvertible());
}

TEST_CASE("mode names") {
    CHECK(parse_mode("poly") == Mode::Polynomial);
    CHECK(parse_mode("spline") == Mode::Spline);
    CHECK_THROWS_AS(parse_mode("cheb"), Error);
}

}  // TEST_SUITE

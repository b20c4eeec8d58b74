#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "test_support.hpp"
#include "tnn/checks.hpp"
#include "tnn/oracles.hpp"
#include "tnn/quadrature.hpp"

using namespace tnn;
using tnn::test::kPi;

namespace {
double integrate(const Grid1D& g, double (*f)(double)) {
    std::vector<double> s(static_cast<std::size_t>(g.size()));
    for (Eigen::Index n = 0; n < g.size(); ++n) s[static_cast<std::size_t>(n)] = f(g.nodes()(n));
    return integrate_1d(g, s);
}
}  // namespace

TEST_CASE("one-point rule is the midpoint rule") {
    const GaussRule r = gauss_legendre(1);
    REQUIRE(r.nodes.size() == 1);
    CHECK(r.nodes(0) == 0.0);
    CHECK(r.weights(0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("two-point rule has nodes +-1/sqrt(3) and unit weights") {
    const GaussRule r = gauss_legendre(2);
    CHECK(r.nodes(0) == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r.nodes(1) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r.weights(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.weights(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("five-point rule integrates x^8 to 2/9") {
    const GaussRule r = gauss_legendre(5);
    const double got = (r.nodes.array().pow(8) * r.weights.array()).sum();
    CHECK(std::abs(got - 2.0 / 9.0) <= 1e-14);
}

TEST_CASE("rule size outside 1..64 is rejected") {
    CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_legendre(65), std::invalid_argument);
    CHECK_NOTHROW(gauss_legendre(64));
}

TEST_CASE("nodes and weights agree with the Jacobi-matrix eigen-decomposition") {
    for (int n = 1; n <= 64; ++n) {
        const GaussRule a = gauss_legendre(n);
        const GaussRule b = oracle::golub_welsch(n);
        CAPTURE(n);
        CHECK((a.nodes - b.nodes).cwiseAbs().maxCoeff() <= 1e-13);
        CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() <= 1e-13);
    }
}

TEST_CASE("rules are symmetric, increasing and positive") {
    for (int n = 1; n <= 64; ++n) {
        const GaussRule r = gauss_legendre(n);
        for (int k = 0; k < n; ++k) {
            CHECK(r.weights(k) > 0.0);
            CHECK(r.nodes(k) == doctest::Approx(-r.nodes(n - 1 - k)).epsilon(1e-15));
            CHECK(r.weights(k) == doctest::Approx(r.weights(n - 1 - k)).epsilon(1e-13));
            if (k > 0) CHECK(r.nodes(k) > r.nodes(k - 1));
        }
    }
}

TEST_CASE("monomial exactness up to degree 2n-1 for n <= 20") {
    const auto r = checks::quadrature_exactness(20, 1e-12);
    CHECK_MESSAGE(r.passed, r.detail);
}

TEST_CASE("composite rule on (0,1) with 10x16 points") {
    const Grid1D g = composite_rule(0.0, 1.0, 10, 16);
    CHECK(g.size() == 160);
    CHECK(g.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(integrate(g, [](double x) { return std::sin(kPi * x); }) - 2.0 / kPi) <= 1e-14);
}

TEST_CASE("composite rule on (-5,5) with 100x16 points") {
    const Grid1D g = composite_rule(-5.0, 5.0, 100, 16);
    CHECK(g.size() == 1600);
    CHECK(g.weights().sum() == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("grid invariants: increasing interior nodes, positive weights") {
    const Grid1D g(-2.0, 3.0, 7, 5);
    CHECK(g.size() == 35);
    CHECK(g.subintervals() == 7);
    CHECK(g.points_per_subinterval() == 5);
    for (Eigen::Index n = 0; n < g.size(); ++n) {
        CHECK(g.weights()(n) > 0.0);
        CHECK(g.nodes()(n) > -2.0);
        CHECK(g.nodes()(n) < 3.0);
        if (n > 0) CHECK(g.nodes()(n) > g.nodes()(n - 1));
    }
}

TEST_CASE("degenerate intervals are rejected") {
    CHECK_THROWS_AS(Grid1D(1.0, 1.0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D(2.0, 1.0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D(0.0, 1.0, 0, 2), std::invalid_argument);
}

TEST_CASE("integrate_1d basic values") {
    const Grid1D g(0.0, 1.0, 10, 16);
    CHECK(integrate(g, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(integrate(g, [](double x) { return x; }) - 0.5) <= 1e-14);
    CHECK(std::abs(integrate(g, [](double x) { return std::exp(x); }) - (std::numbers::e - 1.0)) <= 1e-12);
}

TEST_CASE("integrate_1d rejects misaligned samples") {
    const Grid1D g(0.0, 1.0, 2, 3);
    std::vector<double> s(5, 1.0);
    CHECK_THROWS_AS(integrate_1d(g, s), std::invalid_argument);
}

TEST_CASE("affine consistency of composite rules") {
    auto f = [](double x) { return std::cos(3.0 * x) + x * x * x; };
    const double lo = -1.3, hi = 2.1;
    const Grid1D g(lo, hi, 4, 6);
    const Grid1D unit(0.0, 1.0, 4, 6);
    double direct = 0.0, pulled = 0.0;
    for (Eigen::Index n = 0; n < g.size(); ++n) direct += g.weights()(n) * f(g.nodes()(n));
    for (Eigen::Index n = 0; n < unit.size(); ++n) {
        pulled += unit.weights()(n) * f(lo + (hi - lo) * unit.nodes()(n)) * (hi - lo);
    }
    CHECK(direct == doctest::Approx(pulled).epsilon(1e-13));
}

TEST_CASE("composite error decreases under refinement") {
    // integral of exp(sin(4x)) over [0,2], reference from a very fine rule.
    auto f = [](double x) { return std::exp(std::sin(4.0 * x)); };
    const Grid1D fine(0.0, 2.0, 200, 20);
    double ref = 0.0;
    for (Eigen::Index n = 0; n < fine.size(); ++n) ref += fine.weights()(n) * f(fine.nodes()(n));
    double prev = 1.0;
    for (int s : {1, 2, 4, 8}) {
        const Grid1D g(0.0, 2.0, s, 3);
        double v = 0.0;
        for (Eigen::Index n = 0; n < g.size(); ++n) v += g.weights()(n) * f(g.nodes()(n));
        const double err = std::abs(v - ref);
        CAPTURE(s);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-5);
}

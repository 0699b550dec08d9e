#include <doctest.h>

#include <cmath>

#include "glmtensor/errors.hpp"
#include "glmtensor/quadrature.hpp"

using namespace glmtensor;

namespace {

double double_factorial(int k) {
  double f = 1.0;
  for (int v = k; v > 1; v -= 2) f *= v;
  return f;
}

}  // namespace

TEST_CASE("gauss_hermite_rule basic rules") {
  const QuadratureRule r1 = gauss_hermite_rule(1);
  REQUIRE(r1.nodes.size() == 1);
  CHECK(r1.nodes[0] == doctest::Approx(0.0).epsilon(0).scale(1));
  CHECK(r1.weights[0] == doctest::Approx(1.0));

  const QuadratureRule r2 = gauss_hermite_rule(2);
  REQUIRE(r2.nodes.size() == 2);
  CHECK(r2.nodes[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r2.nodes[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r2.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r2.weights[1] == doctest::Approx(0.5).epsilon(1e-14));

  const QuadratureRule r8 = gauss_hermite_rule(8);
  const double x4 = expect_gaussian_1d(r8, [](double z) { return z * z * z * z; });
  CHECK(x4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("gauss_hermite_rule argument validation") {
  CHECK_THROWS_AS(gauss_hermite_rule(0), invalid_argument);
  CHECK_THROWS_AS(gauss_hermite_rule(-3), invalid_argument);
  CHECK_THROWS_AS(gauss_hermite_rule(257), invalid_argument);
}

TEST_CASE("rule invariants: normalization, symmetry, moment exactness") {
  for (int order : {1, 2, 3, 5, 8, 16, 41, 64}) {
    CAPTURE(order);
    const QuadratureRule rule = gauss_hermite_rule(order);

    double total = 0.0;
    for (double w : rule.weights) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);

    const int n = rule.order;
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(rule.nodes[i] + rule.nodes[n - 1 - i]) <= 1e-12);

    // monomials up to degree 2*order - 1
    for (int k = 0; k <= 2 * order - 1; ++k) {
      const double expected = (k % 2 == 1) ? 0.0 : double_factorial(k - 1);
      const double got = expect_gaussian_1d(rule, [k](double z) { return std::pow(z, k); });
      const double scale = std::max(1.0, std::abs(expected));
      CHECK(std::abs(got - expected) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("same order gives bit-identical rule") {
  const QuadratureRule a = gauss_hermite_rule(41);
  const QuadratureRule b = gauss_hermite_rule(41);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i] == b.nodes[i]);
    CHECK(a.weights[i] == b.weights[i]);
  }
}

TEST_CASE("expect_gaussian tensor products") {
  const QuadratureRule rule = gauss_hermite_rule(8);
  const double one =
      expect_gaussian([](std::span<const double>) { return 1.0; }, rule, 2);
  CHECK(one == doctest::Approx(1.0).epsilon(1e-14));

  const double cross =
      expect_gaussian([](std::span<const double> z) { return z[0] * z[1]; }, rule, 2);
  CHECK(std::abs(cross) <= 1e-14);

  const double second =
      expect_gaussian([](std::span<const double> z) { return z[0] * z[0]; }, rule, 1);
  CHECK(second == doctest::Approx(1.0).epsilon(1e-12));

  const double indep = expect_gaussian(
      [](std::span<const double> z) { return z[0] * z[0] * z[1] * z[1] * z[2] * z[2]; }, rule, 3);
  CHECK(indep == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("non-finite integrand reports the offending node") {
  const QuadratureRule rule = gauss_hermite_rule(5);
  try {
    expect_gaussian([](std::span<const double> z) { return std::log(z[0]); }, rule, 1);
    FAIL("expected numeric_error");
  } catch (const numeric_error& e) {
    REQUIRE(e.node().size() == 1);
    CHECK(e.node()[0] < 0.0);  // log of the most negative node evaluates first
  }
}

TEST_CASE("doubling the order barely moves a smooth integrand") {
  const auto f = [](double z) { return std::exp(-z * z / 4.0); };
  const double a = expect_gaussian_1d(gauss_hermite_rule(41), f);
  const double b = expect_gaussian_1d(gauss_hermite_rule(82), f);
  CHECK(std::abs(a - b) < 1e-8);
}

#include <doctest.h>

#include <cmath>
#include <vector>

#include "glmtensor/activation.hpp"
#include "glmtensor/errors.hpp"
#include "glmtensor/rng.hpp"

using namespace glmtensor;

namespace {

const QuadratureRule& rule() {
  static QuadratureRule r = gauss_hermite_rule(41);
  return r;
}

// Monte-Carlo oracle for I_phi(r, q; rho): samples the outer (U, V, Z) and
// evaluates the inner integral exactly over the sign levels.
std::pair<double, double> mc_output_mi_sign(double r, double q, double rho, int n_samples,
                                            std::uint64_t seed) {
  SplitMix64 rng(seed);
  const double a = std::sqrt(rho - q), b = std::sqrt(q), sqrt_r = std::sqrt(r);
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const double u = rng.normal(), v = rng.normal(), z = rng.normal();
    const double arg = a * u + b * v;
    const double phi_u = arg > 0 ? 1.0 : (arg < 0 ? -1.0 : 0.0);
    const double t0 = -b * v / a;
    const double m_minus = normal_cdf(t0), m_plus = normal_cdf(-t0);
    double inner = 0.0;
    for (const auto& [val, mass] : {std::pair{-1.0, m_minus}, std::pair{1.0, m_plus}}) {
      const double d = phi_u - val;
      inner += mass * std::exp(-0.5 * r * d * d - sqrt_r * d * z);
    }
    const double value = -std::log(inner);
    sum += value;
    sum_sq += value * value;
  }
  const double mean = sum / n_samples;
  const double var = (sum_sq / n_samples - mean * mean) * n_samples / (n_samples - 1.0);
  return {mean, std::sqrt(var / n_samples)};
}

}  // namespace

TEST_CASE("pointwise evaluation and oddness") {
  const Activation sgn = Activation::sign();
  CHECK(sgn(2.5) == 1.0);
  CHECK(sgn(-0.1) == -1.0);
  CHECK(sgn(0.0) == 0.0);  // sign(0) = 0 keeps the activation odd everywhere

  const Activation dz = Activation::sign_deadzone(0.5);
  CHECK(dz(0.4) == 0.0);
  CHECK(dz(-0.4) == 0.0);
  CHECK(dz(0.6) == 1.0);
  CHECK(dz(-0.6) == -1.0);

  // SignDeadzone(0) agrees with Sign except at 0, where both vanish anyway
  const Activation dz0 = Activation::sign_deadzone(0.0);
  for (double x : {-1.7, -0.2, 0.0, 0.3, 2.0}) CHECK(dz0(x) == sgn(x));

  for (double x : {0.1, 0.7, 1.3, 4.0}) {
    CHECK(sgn(-x) == -sgn(x));
    CHECK(dz(-x) == -dz(x));
  }

  CHECK_FALSE(Activation::linear().bounded());
  CHECK(*Activation::sign().sup_norm == 1.0);
}

TEST_CASE("rho_x closed forms") {
  CHECK(rho_x(Activation::linear(), 1.0, rule()) == 1.0);
  CHECK(rho_x(Activation::linear(), 2.5, rule()) == 2.5);
  CHECK(rho_x(Activation::sign(), 1.0, rule()) == 1.0);
  CHECK(rho_x(Activation::sign(), 0.3, rule()) == 1.0);
  const double eps = 0.7;
  CHECK(rho_x(Activation::sign_deadzone(eps), 1.0, rule()) ==
        doctest::Approx(2.0 * normal_cdf(-eps)).epsilon(1e-14));
  // custom path integrates by quadrature
  const Activation tanh_act = Activation::custom([](double x) { return std::tanh(x); }, 1.0);
  const double expected = expect_gaussian_1d(rule(), [](double z) {
    const double t = std::tanh(z);
    return t * t;
  });
  CHECK(rho_x(tanh_act, 1.0, rule()) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("output_mi trivial values") {
  for (const Activation& act :
       {Activation::linear(), Activation::sign(), Activation::sign_deadzone(0.5)}) {
    CHECK(output_mi(act, 0.0, 0.3, 1.0, rule()) == 0.0);
    CHECK(std::abs(output_mi(act, 2.0, 1.0, 1.0, rule())) < 1e-9);  // q = rho_s
  }
  CHECK(output_mi(Activation::linear(), 2.0, 0.5, 1.0, rule()) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("output_mi sign matches the Monte-Carlo oracle") {
  const auto [mc, se] = mc_output_mi_sign(1.0, 0.0, 1.0, 10'000'000, 0xabcddcba);
  const double quad = output_mi(Activation::sign(), 1.0, 0.0, 1.0, rule());
  CHECK(std::abs(quad - mc) <= 3.0 * se);
}

TEST_CASE("level-collapse path matches the generic inner-quadrature path") {
  for (const Activation& act : {Activation::sign(), Activation::sign_deadzone(0.5)}) {
    for (double r : {0.25, 0.8, 2.0, 5.0, 12.0}) {
      for (double q : {0.0, 0.2, 0.45, 0.7, 0.9}) {
        CAPTURE(r);
        CAPTURE(q);
        const double lv = output_mi(act, r, q, 1.0, rule(), MiPath::Levels);
        const double gn = output_mi(act, r, q, 1.0, rule(), MiPath::Generic);
        CHECK(std::abs(lv - gn) < 1e-7);
      }
    }
  }
}

TEST_CASE("output_mi_dr identities") {
  // zero-SNR: derivative is half the variance of phi under the input law
  for (const Activation& act : {Activation::sign(), Activation::sign_deadzone(0.5)}) {
    const OutputMiDr d = output_mi_dr_detail(act, 0.0, 0.0, 1.0, rule());
    const double rho = rho_x(act, 1.0, rule());
    CHECK(d.derivative == doctest::Approx(rho / 2.0).epsilon(1e-12));  // odd phi: mean 0
    CHECK(d.posterior_sq == doctest::Approx(0.0).epsilon(0).scale(1));
  }
  // Linear closed form
  const OutputMiDr lin = output_mi_dr_detail(Activation::linear(), 2.0, 0.25, 1.0, rule());
  CHECK(lin.derivative == doctest::Approx(0.75 / (2.0 * (1.0 + 2.0 * 0.75))).epsilon(1e-14));
}

TEST_CASE("output_mi_dr matches the central difference of output_mi") {
  const double h = 1e-4;
  for (const Activation& act :
       {Activation::linear(), Activation::sign(), Activation::sign_deadzone(0.5)}) {
    for (double r : {0.5, 2.0, 8.0}) {
      for (double q : {0.0, 0.25, 0.6}) {
        CAPTURE(r);
        CAPTURE(q);
        const double fd =
            (output_mi(act, r + h, q, 1.0, rule()) - output_mi(act, r - h, q, 1.0, rule())) /
            (2.0 * h);
        CHECK(std::abs(output_mi_dr(act, r, q, 1.0, rule()) - fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("output_mi monotone, concave and Lipschitz in r") {
  for (const Activation& act : {Activation::sign(), Activation::sign_deadzone(0.3)}) {
    const double q = 0.25, rho = 1.0;
    std::vector<double> grid, values;
    for (int i = 0; i <= 24; ++i) grid.push_back(0.5 * i);
    for (double r : grid) values.push_back(output_mi(act, r, q, rho, rule()));
    const double lip = 0.5;  // ||phi||_inf^2 / 2
    for (std::size_t i = 1; i < values.size(); ++i) {
      CHECK(values[i] - values[i - 1] >= -1e-10);
      CHECK(std::abs(values[i] - values[i - 1]) <=
            lip * (grid[i] - grid[i - 1]) + 1e-8);
    }
    for (std::size_t i = 2; i < values.size(); ++i)
      CHECK(values[i] - 2.0 * values[i - 1] + values[i - 2] <= 1e-8);
  }
}

TEST_CASE("output_mi_dq") {
  // Linear closed form: dI/dq = -r / (2 (1 + r (rho - q)))
  for (double r : {0.5, 2.0}) {
    for (double q : {0.2, 0.5, 0.8}) {
      const double expected = -r / (2.0 * (1.0 + r * (1.0 - q)));
      CHECK(std::abs(output_mi_dq(Activation::linear(), r, q, 1.0, rule()) - expected) < 1e-6);
    }
  }
  CHECK(output_mi_dq(Activation::sign(), 0.0, 0.5, 1.0, rule()) == 0.0);

  // Richardson-extrapolated oracle for the sign activation
  const Activation sgn = Activation::sign();
  const auto fd = [&](double h) {
    return (output_mi(sgn, 1.0, 0.5 + h, 1.0, rule()) -
            output_mi(sgn, 1.0, 0.5 - h, 1.0, rule())) /
           (2.0 * h);
  };
  const double d1 = fd(2e-4), d2 = fd(1e-4);
  const double richardson = (4.0 * d2 - d1) / 3.0;
  const double got = output_mi_dq(sgn, 1.0, 0.5, 1.0, rule());
  CHECK(std::abs(got - richardson) < 1e-6);
  CHECK(got <= 1e-6);  // side information cannot increase the MI

  // boundary q = 0 uses a one-sided difference and stays finite
  bool warned = false;
  const double at_zero = output_mi_dq(sgn, 1.0, 0.0, 1.0, rule(), 0.0, &warned);
  CHECK(std::isfinite(at_zero));
}

TEST_CASE("custom activation runs through the generic path") {
  const Activation tanh_act = Activation::custom([](double x) { return std::tanh(x); }, 1.0);
  const double mi = output_mi(tanh_act, 1.5, 0.2, 1.0, rule());
  CHECK(mi > 0.0);
  CHECK(mi < 0.5 * std::log1p(1.5 * 0.8) + 0.1);
  // derivative consistency on the generic path
  const double h = 1e-4;
  const double fd = (output_mi(tanh_act, 1.5 + h, 0.2, 1.0, rule()) -
                     output_mi(tanh_act, 1.5 - h, 0.2, 1.0, rule())) /
                    (2.0 * h);
  CHECK(std::abs(output_mi_dr(tanh_act, 1.5, 0.2, 1.0, rule()) - fd) < 1e-5);
}

TEST_CASE("normal_quantile inverts normal_cdf") {
  for (double t : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    const double x = detail::normal_quantile(t);
    CHECK(std::abs(normal_cdf(x) - t) <= 1e-14 * std::max(t, 1.0 - t) + 1e-300);
  }
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(output_mi(Activation::sign(), -1.0, 0.2, 1.0, rule()), invalid_argument);
  CHECK_THROWS_AS(output_mi(Activation::sign(), 1.0, 1.5, 1.0, rule()), invalid_argument);
  CHECK_THROWS_AS(Activation::sign_deadzone(-0.2), invalid_argument);
}

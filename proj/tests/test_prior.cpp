#include <doctest.h>

#include <cmath>
#include <vector>

#include "glmtensor/errors.hpp"
#include "glmtensor/prior.hpp"
#include "glmtensor/rng.hpp"

using namespace glmtensor;

namespace {

const QuadratureRule& rule() {
  static QuadratureRule r = gauss_hermite_rule(41);
  return r;
}

// Independent Monte-Carlo oracle for I(S; sqrt(r_s) S + Z) of a discrete
// prior: samples (S, Z) and evaluates the same log-expectation exactly over
// the support. Returns (estimate, standard error).
std::pair<double, double> mc_scalar_mi(const Prior& prior, double r_s, int n_samples,
                                       std::uint64_t seed) {
  SplitMix64 rng(seed);
  const Moments mom = moments(prior);
  const double sqrt_rs = std::sqrt(r_s);
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const double u = rng.uniform();
    double acc = 0.0;
    double s_true = prior.values.back();
    for (std::size_t i = 0; i < prior.values.size(); ++i) {
      acc += prior.probabilities[i];
      if (u < acc) {
        s_true = prior.values[i];
        break;
      }
    }
    const double z = rng.normal();
    double mx = -HUGE_VAL;
    std::vector<double> expo(prior.values.size());
    for (std::size_t i = 0; i < prior.values.size(); ++i) {
      const double s = prior.values[i];
      expo[i] = r_s * s_true * s + sqrt_rs * z * s - 0.5 * r_s * s * s;
      mx = std::max(mx, expo[i]);
    }
    double inner = 0.0;
    for (std::size_t i = 0; i < prior.values.size(); ++i)
      inner += prior.probabilities[i] * std::exp(expo[i] - mx);
    const double value = 0.5 * r_s * mom.second - (mx + std::log(inner));
    sum += value;
    sum_sq += value * value;
  }
  const double mean = sum / n_samples;
  const double var = (sum_sq / n_samples - mean * mean) * n_samples / (n_samples - 1.0);
  return {mean, std::sqrt(var / n_samples)};
}

}  // namespace

TEST_CASE("moments") {
  const Moments g = moments(Prior::gaussian(0.0, 1.0));
  CHECK(g.mean == 0.0);
  CHECK(g.second == 1.0);

  const Moments tp = moments(Prior::two_point(1.0, -1.0, 0.6));
  CHECK(tp.mean == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(tp.second == doctest::Approx(1.0).epsilon(1e-15));

  const Moments br = moments(Prior::finite_support({-1.0, 0.0, 1.0}, {0.025, 0.95, 0.025}));
  CHECK(br.mean == 0.0);
  CHECK(br.second == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("prior validation") {
  CHECK_THROWS_AS(Prior::finite_support({1.0}, {0.5}), invalid_argument);
  CHECK_THROWS_AS(Prior::finite_support({1.0, 2.0}, {0.7, 0.4}), invalid_argument);
  CHECK_THROWS_AS(Prior::finite_support({1.0, 2.0}, {-0.1, 1.1}), invalid_argument);
  CHECK_THROWS_AS(Prior::two_point(1.0, -1.0, 1.5), invalid_argument);
}

TEST_CASE("scalar_mi closed form and boundaries") {
  CHECK(scalar_mi(Prior::gaussian(0.0, 1.0), 1.0, rule()) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(scalar_mi(Prior::gaussian(0.0, 1.0), 0.0, rule()) == 0.0);
  CHECK(scalar_mi(Prior::rademacher(), 0.0, rule()) == 0.0);
  CHECK_THROWS_AS(scalar_mi(Prior::rademacher(), -0.5, rule()), invalid_argument);
}

TEST_CASE("scalar_mi matches the Monte-Carlo oracle for the Rademacher prior") {
  const Prior prior = Prior::rademacher();
  const auto [mc, se] = mc_scalar_mi(prior, 1.0, 10'000'000, 0xfeedbead);
  const double quad = scalar_mi(prior, 1.0, rule());
  CHECK(std::abs(quad - mc) <= 3.0 * se);
}

TEST_CASE("scalar_mmse closed form and boundaries") {
  CHECK(scalar_mmse(Prior::gaussian(0.0, 1.0), 3.0, rule()) == doctest::Approx(0.25).epsilon(1e-14));
  // at r_s = 0 the MMSE is the prior variance
  CHECK(scalar_mmse(Prior::rademacher(), 0.0, rule()) == doctest::Approx(1.0).epsilon(1e-14));
  const Prior asym = Prior::two_point(1.0, -1.0, 0.6);
  CHECK(scalar_mmse(asym, 0.0, rule()) == doctest::Approx(1.0 - 0.04).epsilon(1e-12));
}

TEST_CASE("scalar_mmse equals twice the derivative of scalar_mi") {
  const double h = 1e-4;
  for (const Prior& prior : {Prior::rademacher(), Prior::two_point(1.0, -1.0, 0.6),
                             Prior::bernoulli_rademacher(0.05), Prior::gaussian(0.0, 1.0)}) {
    for (double r_s : {0.1, 1.0, 10.0}) {
      CAPTURE(r_s);
      const double diff =
          (scalar_mi(prior, r_s + h, rule()) - scalar_mi(prior, r_s - h, rule())) / (2.0 * h);
      CHECK(std::abs(2.0 * diff - scalar_mmse(prior, r_s, rule())) < 1e-5);
    }
  }
  // spec example: TwoPoint(+-1, 0.5) at r_s = 2, central step 1e-4
  const Prior rad = Prior::rademacher();
  const double fd =
      2.0 * (scalar_mi(rad, 2.0 + 1e-4, rule()) - scalar_mi(rad, 2.0 - 1e-4, rule())) / 2e-4;
  CHECK(scalar_mmse(rad, 2.0, rule()) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("scalar_mi is nondecreasing and concave in r_s") {
  for (const Prior& prior : {Prior::rademacher(), Prior::two_point(1.0, -1.0, 0.7),
                             Prior::bernoulli_rademacher(0.05), Prior::gaussian(0.0, 1.0)}) {
    std::vector<double> grid;
    for (int i = 0; i <= 30; ++i) grid.push_back(0.2 * i);
    std::vector<double> values;
    for (double r : grid) values.push_back(scalar_mi(prior, r, rule()));
    for (std::size_t i = 1; i < values.size(); ++i)
      CHECK(values[i] - values[i - 1] >= -1e-10);
    for (std::size_t i = 2; i < values.size(); ++i) {
      const double second = values[i] - 2.0 * values[i - 1] + values[i - 2];
      CHECK(second <= 1e-8);
    }
  }
}

TEST_CASE("solve_rs boundary and closed-form cases") {
  CHECK(solve_rs(Prior::gaussian(0.0, 1.0), 0.5, rule()).r_s == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(solve_rs(Prior::rademacher(), 0.0, rule()).r_s == 0.0);
  CHECK(solve_rs(Prior::gaussian(0.0, 1.0), 0.0, rule()).r_s == 0.0);
}

TEST_CASE("solve_rs hits the stationarity condition when unsaturated") {
  for (const Prior& prior : {Prior::rademacher(), Prior::two_point(1.0, -1.0, 0.6)}) {
    const Moments mom = moments(prior);
    for (double q_frac : {0.3, 0.6, 0.9}) {
      const double q_s = q_frac * mom.second;
      const RsSolution sol = solve_rs(prior, q_s, rule());
      if (!sol.saturated && sol.r_s > 0.0)
        CHECK(std::abs(scalar_mmse(prior, sol.r_s, rule()) - (mom.second - q_s)) < 1e-8);
    }
  }
}

TEST_CASE("solve_rs against the finite-difference MMSE oracle") {
  // spec example: Rademacher prior, q_s = 0.9; locate the root of the
  // 2 d(scalar_mi)/dr = rho_s - q_s condition with the oracle MMSE.
  const Prior rad = Prior::rademacher();
  const double q_s = 0.9;
  const auto fd_mmse = [&](double r) {
    const double h = 1e-5 * std::max(r, 1.0);
    return (scalar_mi(rad, r + h, rule()) - scalar_mi(rad, r - h, rule())) / h;
  };
  double lo = 1e-6, hi = 1e3;
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (fd_mmse(mid) > 1.0 - q_s)
      lo = mid;
    else
      hi = mid;
  }
  const double oracle_r = 0.5 * (lo + hi);
  const RsSolution sol = solve_rs(rad, q_s, rule());
  CHECK_FALSE(sol.saturated);
  CHECK(sol.r_s == doctest::Approx(oracle_r).epsilon(1e-5));
}

TEST_CASE("solve_rs saturates at r_cap") {
  const Prior rad = Prior::rademacher();
  const RsSolution sol = solve_rs(rad, 1.0, rule(), 10.0);  // q_s = rho_s needs r -> infinity
  CHECK(sol.saturated);
  CHECK(sol.r_s == 10.0);
}

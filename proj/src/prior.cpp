#include "glmtensor/prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glmtensor/errors.hpp"

namespace glmtensor {

namespace {

void check_distribution(const std::vector<double>& values, const std::vector<double>& probs) {
  if (values.empty() || values.size() != probs.size())
    throw invalid_argument("finite-support prior needs matching nonempty values/probabilities");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw invalid_argument("prior probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw invalid_argument("prior probabilities must sum to 1, got " + std::to_string(total));
}

}  // namespace

Prior Prior::gaussian(double mean, double variance) {
  if (!(variance >= 0.0)) throw invalid_argument("gaussian prior needs variance >= 0");
  Prior p;
  p.kind = PriorKind::Gaussian;
  p.mean = mean;
  p.variance = variance;
  p.support_bound = 0.0;
  return p;
}

Prior Prior::two_point(double v_plus, double v_minus, double p_plus) {
  if (!(p_plus >= 0.0 && p_plus <= 1.0))
    throw invalid_argument("two_point prior needs p_plus in [0, 1]");
  Prior p;
  p.kind = PriorKind::TwoPoint;
  p.values = {v_plus, v_minus};
  p.probabilities = {p_plus, 1.0 - p_plus};
  p.support_bound = std::max(std::abs(v_plus), std::abs(v_minus));
  return p;
}

Prior Prior::finite_support(std::vector<double> values, std::vector<double> probabilities) {
  check_distribution(values, probabilities);
  Prior p;
  p.kind = PriorKind::FiniteSupport;
  p.values = std::move(values);
  p.probabilities = std::move(probabilities);
  p.support_bound = 0.0;
  for (double v : p.values) p.support_bound = std::max(p.support_bound, std::abs(v));
  return p;
}

Prior Prior::bernoulli_rademacher(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw invalid_argument("bernoulli_rademacher needs rho in [0, 1]");
  return finite_support({-1.0, 0.0, 1.0}, {rho / 2, 1.0 - rho, rho / 2});
}

Moments moments(const Prior& prior) {
  if (prior.kind == PriorKind::Gaussian)
    return {prior.mean, prior.variance + prior.mean * prior.mean};
  Moments m;
  for (std::size_t i = 0; i < prior.values.size(); ++i) {
    m.mean += prior.probabilities[i] * prior.values[i];
    m.second += prior.probabilities[i] * prior.values[i] * prior.values[i];
  }
  return m;
}

namespace {

// Exponent lines of the inner evidence given the true value v_a:
// E_b(z) = ln p_b + r_s v_a v_b - r_s v_b^2 / 2 + sqrt(r_s) v_b z.
// The z-integrand bends on a 1/sqrt(r_s) scale where the dominant line
// switches, so the integral runs on panels split at the envelope crossings.
struct EvidenceLines {
  std::vector<double> A, B;
  Panels panels;
};

EvidenceLines evidence_lines(const Prior& prior, std::size_t a, double r_s,
                             const QuadratureRule& rule) {
  const auto& v = prior.values;
  const auto& p = prior.probabilities;
  EvidenceLines lines;
  const double sqrt_rs = std::sqrt(r_s);
  for (std::size_t b = 0; b < v.size(); ++b) {
    if (p[b] == 0.0) continue;
    lines.A.push_back(std::log(p[b]) + r_s * v[a] * v[b] - 0.5 * r_s * v[b] * v[b]);
    lines.B.push_back(sqrt_rs * v[b]);
  }
  const double z_limit = rule.nodes.empty() ? 12.0 : rule.nodes.back() + 2.0;
  lines.panels = gaussian_split_rule(detail::envelope_crossings(lines.A, lines.B, z_limit), rule);
  return lines;
}

}  // namespace

double scalar_mi(const Prior& prior, double r_s, const QuadratureRule& rule) {
  if (!(r_s >= 0.0)) throw invalid_argument("scalar_mi: r_s must be >= 0");
  if (r_s == 0.0) return 0.0;
  if (prior.kind == PriorKind::Gaussian) return 0.5 * std::log1p(r_s * prior.variance);

  const auto& p = prior.probabilities;
  const Moments mom = moments(prior);
  double outer = 0.0;
  for (std::size_t a = 0; a < prior.values.size(); ++a) {
    if (p[a] == 0.0) continue;
    const EvidenceLines lines = evidence_lines(prior, a, r_s, rule);
    const std::size_t m = lines.A.size();
    const double inner = expect_gaussian_1d(lines.panels, [&](double z) {
      double mx = -HUGE_VAL;
      for (std::size_t b = 0; b < m; ++b) mx = std::max(mx, lines.A[b] + lines.B[b] * z);
      double sum = 0.0;
      for (std::size_t b = 0; b < m; ++b) sum += std::exp(lines.A[b] + lines.B[b] * z - mx);
      return mx + std::log(sum);
    });
    outer += p[a] * inner;
  }
  return 0.5 * r_s * mom.second - outer;
}

double scalar_mmse(const Prior& prior, double r_s, const QuadratureRule& rule) {
  if (!(r_s >= 0.0)) throw invalid_argument("scalar_mmse: r_s must be >= 0");
  if (prior.kind == PriorKind::Gaussian) return prior.variance / (1.0 + r_s * prior.variance);

  const auto& v = prior.values;
  const auto& p = prior.probabilities;
  double acc = 0.0;
  for (std::size_t a = 0; a < v.size(); ++a) {
    if (p[a] == 0.0) continue;
    const EvidenceLines lines = evidence_lines(prior, a, r_s, rule);
    std::vector<double> support;  // values aligned with lines.A/B
    for (std::size_t b = 0; b < v.size(); ++b)
      if (p[b] > 0.0) support.push_back(v[b]);
    const std::size_t m = lines.A.size();
    const double inner = expect_gaussian_1d(lines.panels, [&](double z) {
      double mx = -HUGE_VAL;
      for (std::size_t b = 0; b < m; ++b) mx = std::max(mx, lines.A[b] + lines.B[b] * z);
      double num = 0.0, den = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        const double w = std::exp(lines.A[b] + lines.B[b] * z - mx);
        num += w * support[b];
        den += w;
      }
      const double diff = v[a] - num / den;
      return diff * diff;
    });
    acc += p[a] * inner;
  }
  return acc;
}

RsSolution solve_rs(const Prior& prior, double q_s, const QuadratureRule& rule, double r_cap) {
  const Moments mom = moments(prior);
  const double variance = mom.second - mom.mean * mom.mean;
  if (!(q_s >= 0.0 && q_s <= mom.second + 1e-12))
    throw invalid_argument("solve_rs: q_s must lie in [0, rho_s]");
  if (!(r_cap > 0.0)) throw invalid_argument("solve_rs: r_cap must be positive");

  const double target = mom.second - q_s;
  if (target >= variance) return {0.0, false};  // sup attained at the boundary
  if (scalar_mmse(prior, r_cap, rule) > target) return {r_cap, true};

  double lo = 0.0, hi = r_cap;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (scalar_mmse(prior, mid, rule) > target)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false};
}

}  // namespace glmtensor

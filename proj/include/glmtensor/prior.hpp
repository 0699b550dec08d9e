#pragma once

#include <vector>

#include "glmtensor/quadrature.hpp"

namespace glmtensor {

enum class PriorKind { Gaussian, TwoPoint, FiniteSupport };

/// Latent scalar distribution P_S. TwoPoint and FiniteSupport are stored as
/// (values, probabilities); Gaussian keeps (mean, variance) and reports an
/// unbounded support (support_bound = 0).
struct Prior {
  PriorKind kind = PriorKind::Gaussian;
  double mean = 0.0;      // Gaussian only
  double variance = 1.0;  // Gaussian only
  std::vector<double> values;
  std::vector<double> probabilities;
  double support_bound = 0.0;  // M_S; 0 encodes unbounded (Gaussian only)

  static Prior gaussian(double mean, double variance);
  static Prior two_point(double v_plus, double v_minus, double p_plus);
  static Prior finite_support(std::vector<double> values, std::vector<double> probabilities);
  /// P(+1) = P(-1) = 1/2.
  static Prior rademacher() { return two_point(1.0, -1.0, 0.5); }
  /// P(0) = 1 - rho, P(+1) = P(-1) = rho/2.
  static Prior bernoulli_rademacher(double rho);

  bool discrete() const { return kind != PriorKind::Gaussian; }
};

struct Moments {
  double mean = 0.0;    // m_s
  double second = 0.0;  // rho_s
};

/// Exact first and second moments (m_s, rho_s).
Moments moments(const Prior& prior);

/// Mutual information I(S; sqrt(r_s) S + Z) in nats. Closed form
/// (1/2) ln(1 + r_s * variance) for Gaussian priors; otherwise
/// r_s rho_s / 2 - E ln sum_s p_s exp(r_s S s + sqrt(r_s) Z s - r_s s^2 / 2)
/// with the Z-expectation by quadrature and both sums over the support exact.
double scalar_mi(const Prior& prior, double r_s, const QuadratureRule& rule);

/// Scalar MMSE E[(S - E[S | sqrt(r_s) S + Z])^2]; equals twice the derivative
/// of scalar_mi. Nonincreasing in r_s, equal to the prior variance at r_s = 0.
double scalar_mmse(const Prior& prior, double r_s, const QuadratureRule& rule);

struct RsSolution {
  double r_s = 0.0;
  bool saturated = false;  // target MMSE below scalar_mmse(r_cap)
};

inline constexpr double kDefaultRsCap = 1e6;

/// Inner sup over r_s: the unique root of scalar_mmse(r) = rho_s - q_s,
/// or 0 when q_s is at most the prior variance (boundary optimum). Located
/// by bisection on [0, r_cap] to absolute tolerance 1e-10 and clamped to
/// r_cap (flagged) when the target is unreachable.
RsSolution solve_rs(const Prior& prior, double q_s, const QuadratureRule& rule,
                    double r_cap = kDefaultRsCap);

}  // namespace glmtensor

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace glmtensor {

/// Probabilists' Gauss-Hermite rule: approximates E[f(Z)] for Z ~ N(0,1).
/// Weights sum to 1 and the node set is symmetric about 0 (paired nodes
/// carry identical weights, so odd integrands cancel exactly in pair order).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;
};

inline constexpr int kDefaultQuadOrder = 41;

/// Builds the probabilists' Gauss-Hermite rule of the given order
/// (1 <= order <= 256): eigenvalues of the Jacobi matrix polished by Newton
/// iteration on the orthonormal recurrence, weights from the Christoffel
/// formula w_i = 1 / sum_k p_k(x_i)^2 (the raw eigenvector weights lose the
/// extreme nodes below ~1e-32). Deterministic: same order, bit-identical rule.
QuadratureRule gauss_hermite_rule(int order);

/// Gauss-Legendre rule on [-1, 1] (weights sum to 2). Support machinery for
/// the panel rules below, not a Gaussian rule. Cached per order.
const QuadratureRule& gauss_legendre_rule(int order);

/// Standard normal CDF and its inverse.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
double normal_quantile(double t);

/// A custom node/weight list for E[g(Z)]; no symmetry or ordering promises.
struct Panels {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Piecewise rule for E[g(Z)] that is robust to sharp features or jumps at
/// the given points: each segment between consecutive splits gets a mapped
/// Gauss-Legendre panel in CDF space, so segment masses are exact and the
/// panel nodes cluster next to the feature. Splits far outside the support
/// of N(0,1) are dropped; with no usable splits the base rule is returned.
Panels gaussian_split_rule(std::vector<double> splits, const QuadratureRule& base);

namespace detail {

[[noreturn]] void throw_nonfinite(const double* node, int d);

/// Kink locations of z -> max_b (A_b + B_b z): pairwise line crossings,
/// restricted to |z| <= z_limit, sorted. Used to place integration panels
/// for log-sum-exp integrands, which bend on a 1/|dB| scale at each kink.
std::vector<double> envelope_crossings(std::span<const double> A, std::span<const double> B,
                                       double z_limit);

}  // namespace detail

/// Tensor-product estimate of E[f(Z_1,...,Z_d)] for independent standard
/// normals, d in 1..3. Throws numeric_error (carrying the offending node)
/// if f returns a non-finite value.
double expect_gaussian(std::function<double(std::span<const double>)> f,
                       const QuadratureRule& rule, int d);

// Inlined fixed-dimension variants for hot paths; R is any node/weight list.
template <class R, class F>
double expect_gaussian_1d(const R& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) detail::throw_nonfinite(&rule.nodes[i], 1);
    acc += rule.weights[i] * v;
  }
  return acc;
}

template <class R, class F>
double expect_gaussian_2d(const R& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double v = f(rule.nodes[i], rule.nodes[j]);
      if (!std::isfinite(v)) {
        const double node[2] = {rule.nodes[i], rule.nodes[j]};
        detail::throw_nonfinite(node, 2);
      }
      row += rule.weights[j] * v;
    }
    acc += rule.weights[i] * row;
  }
  return acc;
}

template <class R, class F>
double expect_gaussian_3d(const R& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    double plane = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      double row = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double v = f(rule.nodes[i], rule.nodes[j], rule.nodes[k]);
        if (!std::isfinite(v)) {
          const double node[3] = {rule.nodes[i], rule.nodes[j], rule.nodes[k]};
          detail::throw_nonfinite(node, 3);
        }
        row += rule.weights[k] * v;
      }
      plane += rule.weights[j] * row;
    }
    acc += rule.weights[i] * plane;
  }
  return acc;
}

}  // namespace glmtensor

#include "glmtensor/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

#include "glmtensor/errors.hpp"

namespace glmtensor {

namespace detail {

void throw_nonfinite(const double* node, int d) {
  std::ostringstream oss;
  oss << "integrand returned a non-finite value at node (";
  for (int i = 0; i < d; ++i) oss << (i ? ", " : "") << node[i];
  oss << ")";
  throw numeric_error(oss.str(), std::vector<double>(node, node + d));
}

std::vector<double> envelope_crossings(std::span<const double> A, std::span<const double> B,
                                       double z_limit) {
  std::vector<double> out;
  for (std::size_t b = 0; b < A.size(); ++b) {
    for (std::size_t c = b + 1; c < A.size(); ++c) {
      const double db = B[b] - B[c];
      if (std::abs(db) < 1e-12 * (std::abs(B[b]) + std::abs(B[c]) + 1.0)) continue;
      const double z = (A[c] - A[b]) / db;
      if (std::isfinite(z) && std::abs(z) <= z_limit) out.push_back(z);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

namespace {

// Orthonormal probabilists' Hermite value p_n(x) and p_{n-1}(x) via the
// recurrence p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1).
void hermite_pair(int n, double x, double& p_n, double& p_nm1) {
  double prev = 0.0, cur = 1.0;
  for (int k = 0; k < n; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  p_n = cur;
  p_nm1 = prev;
}

double christoffel_weight(int n, double x) {
  // w = 1 / sum_{k=0}^{n-1} p_k(x)^2; all terms positive, no cancellation.
  double prev = 0.0, cur = 1.0, sum = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
    sum += cur * cur;
  }
  return 1.0 / sum;
}

}  // namespace

QuadratureRule gauss_hermite_rule(int order) {
  if (order < 1 || order > 256)
    throw invalid_argument("gauss_hermite_rule: order must be in [1, 256], got " +
                           std::to_string(order));

  QuadratureRule rule;
  rule.order = order;
  if (order == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }

  // Jacobi-matrix eigenvalues as initial guesses (He_{k+1} = x He_k - k He_{k-1}
  // gives zero diagonal and off-diagonal sqrt(k)), then Newton on the
  // orthonormal recurrence using p_n'(x) = sqrt(n) p_{n-1}(x).
  const int n = order;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);

  std::vector<double> nodes(n);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    double x = eig.eigenvalues()(i);
    for (int it = 0; it < 50; ++it) {
      double p_n, p_nm1;
      hermite_pair(n, x, p_n, p_nm1);
      const double step = p_n / (sqrt_n * p_nm1);
      x -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
    }
    nodes[i] = x;
  }
  std::sort(nodes.begin(), nodes.end());

  // Exact symmetry: average the +/- pairs, pin the central node of odd rules.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;

  std::vector<double> weights(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    weights[i] = christoffel_weight(n, nodes[i]);
    weights[n - 1 - i] = weights[i];
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;

  rule.nodes = std::move(nodes);
  rule.weights = std::move(weights);
  return rule;
}

const QuadratureRule& gauss_legendre_rule(int order) {
  static std::map<int, QuadratureRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = eig.eigenvalues()(i);
    const double v = eig.eigenvectors()(0, i);
    rule.weights[i] = 2.0 * v * v;
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

double normal_quantile(double t) {
  t = std::min(std::max(t, 1e-300), 1.0 - 1e-16);
  const bool flip = t > 0.5;
  if (flip) t = 1.0 - t;
  const double lnt = std::log(t);
  // Tail seed from Phi(x) ~ density/|x|; Newton on ln Phi(x) = ln t.
  double x = -std::sqrt(std::max(0.0, -2.0 * lnt));
  constexpr double half_ln_2pi = 0.9189385332046727;
  for (int it = 0; it < 100; ++it) {
    const double ln_phi = std::log(normal_cdf(x));
    const double ratio = std::exp(ln_phi + 0.5 * x * x + half_ln_2pi);  // Phi / density
    const double step = (ln_phi - lnt) * ratio;
    x -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
  }
  return flip ? -x : x;
}

Panels gaussian_split_rule(std::vector<double> splits, const QuadratureRule& base) {
  const double z_limit = base.nodes.empty() ? 12.0 : base.nodes.back() + 2.0;
  std::sort(splits.begin(), splits.end());
  std::vector<double> kept;
  for (double s : splits) {
    if (!std::isfinite(s) || std::abs(s) > z_limit) continue;
    if (kept.empty() || s - kept.back() > 1e-12) kept.push_back(s);
  }
  Panels panels;
  if (kept.empty()) {
    panels.nodes = base.nodes;
    panels.weights = base.weights;
    return panels;
  }
  const QuadratureRule& gl = gauss_legendre_rule(base.order);
  std::vector<double> t_edges;
  t_edges.push_back(0.0);
  for (double s : kept) t_edges.push_back(normal_cdf(s));
  t_edges.push_back(1.0);
  for (std::size_t s = 0; s + 1 < t_edges.size(); ++s) {
    const double half = 0.5 * (t_edges[s + 1] - t_edges[s]);
    if (half <= 0.0) continue;
    const double mid = 0.5 * (t_edges[s] + t_edges[s + 1]);
    for (int k = 0; k < gl.order; ++k) {
      panels.nodes.push_back(normal_quantile(mid + half * gl.nodes[k]));
      panels.weights.push_back(half * gl.weights[k]);
    }
  }
  return panels;
}

double expect_gaussian(std::function<double(std::span<const double>)> f,
                       const QuadratureRule& rule, int d) {
  switch (d) {
    case 1:
      return expect_gaussian_1d(rule, [&f](double z) {
        const double pt[1] = {z};
        return f(std::span<const double>(pt, 1));
      });
    case 2:
      return expect_gaussian_2d(rule, [&f](double z1, double z2) {
        const double pt[2] = {z1, z2};
        return f(std::span<const double>(pt, 2));
      });
    case 3:
      return expect_gaussian_3d(rule, [&f](double z1, double z2, double z3) {
        const double pt[3] = {z1, z2, z3};
        return f(std::span<const double>(pt, 3));
      });
    default:
      throw invalid_argument("expect_gaussian: dimension must be 1, 2 or 3");
  }
}

}  // namespace glmtensor

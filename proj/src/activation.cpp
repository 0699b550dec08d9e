#include "glmtensor/activation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Dense>

#include "glmtensor/errors.hpp"

namespace glmtensor {

namespace {

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

constexpr double kDegenerateQ = 1e-14;  // rho_s - q below this: channel carries no U

struct Level {
  double value;
  double mass;
};

// Output levels of phi(scale * u + shift) for u ~ N(0,1), piecewise-constant
// kinds only. Masses are computed from one-sided CDF expressions so that the
// +/- masses are exactly equal when shift = 0.
std::vector<Level> levels_at(const Activation& act, double scale, double shift) {
  if (act.kind == ActivationKind::Sign) {
    const double u0 = -shift / scale;
    return {{-1.0, normal_cdf(u0)}, {1.0, normal_cdf(-u0)}};
  }
  const double u_minus = (-act.epsilon - shift) / scale;
  const double u_plus = (act.epsilon - shift) / scale;
  const double m_minus = normal_cdf(u_minus);
  const double m_plus = normal_cdf(-u_plus);
  const double m_zero = std::max(0.0, 1.0 - m_minus - m_plus);
  return {{-1.0, m_minus}, {0.0, m_zero}, {1.0, m_plus}};
}

// Gauss-Legendre rule on [-1, 1] (weights sum to 2), cached per order.
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

}  // namespace

Activation Activation::linear() {
  Activation a;
  a.kind = ActivationKind::Linear;
  a.sup_norm = std::nullopt;
  return a;
}

Activation Activation::sign() {
  Activation a;
  a.kind = ActivationKind::Sign;
  a.sup_norm = 1.0;
  return a;
}

Activation Activation::sign_deadzone(double epsilon) {
  if (!(epsilon >= 0.0)) throw invalid_argument("sign_deadzone: epsilon must be >= 0");
  Activation a;
  a.kind = ActivationKind::SignDeadzone;
  a.epsilon = epsilon;
  a.sup_norm = 1.0;
  return a;
}

Activation Activation::custom(std::function<double(double)> fn, std::optional<double> sup_norm) {
  if (!fn) throw invalid_argument("custom activation needs a function");
  Activation a;
  a.kind = ActivationKind::Custom;
  a.fn = std::move(fn);
  a.sup_norm = sup_norm;
  return a;
}

double Activation::operator()(double x) const {
  switch (kind) {
    case ActivationKind::Linear:
      return x;
    case ActivationKind::Sign:
      return sign0(x);
    case ActivationKind::SignDeadzone:
      return std::abs(x) <= epsilon ? 0.0 : sign0(x);
    case ActivationKind::Custom:
      return fn(x);
  }
  return 0.0;
}

double rho_x(const Activation& act, double rho_s, const QuadratureRule& rule) {
  if (!(rho_s >= 0.0)) throw invalid_argument("rho_x: rho_s must be >= 0");
  const double sd = std::sqrt(rho_s);
  switch (act.kind) {
    case ActivationKind::Linear:
      return rho_s;
    case ActivationKind::Sign:
      return rho_s > 0.0 ? 1.0 : 0.0;
    case ActivationKind::SignDeadzone:
      return rho_s > 0.0 ? 2.0 * normal_cdf(-act.epsilon / sd) : 0.0;
    case ActivationKind::Custom:
      return expect_gaussian_1d(rule, [&](double z) {
        const double v = act(sd * z);
        return v * v;
      });
  }
  return 0.0;
}

namespace detail {

double normal_quantile(double t) {
  t = std::min(std::max(t, 1e-300), 1.0 - 1e-16);
  const bool flip = t > 0.5;
  if (flip) t = 1.0 - t;
  const double lnt = std::log(t);
  // Tail seed from Phi(x) ~ N(x)/|x|; Newton on ln Phi(x) = ln t.
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

namespace {

// Locates a jump of f between lo and hi by bisecting towards the point where
// the value switches sides.
double locate_jump(const std::function<double(double)>& f, double lo, double hi) {
  double f_lo = f(lo), f_hi = f(hi);
  while (hi - lo > 1e-13 * (1.0 + std::abs(lo) + std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm - f_lo) <= std::abs(fm - f_hi)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
      f_hi = fm;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

GaussianAxis build_axis(const Activation& act, double scale, double shift,
                        const QuadratureRule& rule) {
  const auto phi_at = [&](double u) { return act(scale * u + shift); };

  // Probe on a grid 4x denser than the base rule to find jump candidates.
  const int n = rule.order;
  const double u_min = rule.nodes.front(), u_max = rule.nodes.back();
  std::vector<double> probes;
  probes.reserve(4 * n);
  for (int i = 0; i + 1 < n; ++i)
    for (int k = 0; k < 4; ++k)
      probes.push_back(rule.nodes[i] + 0.25 * k * (rule.nodes[i + 1] - rule.nodes[i]));
  probes.push_back(u_max);

  std::vector<double> vals(probes.size());
  double lo_v = HUGE_VAL, hi_v = -HUGE_VAL;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    vals[i] = phi_at(probes[i]);
    lo_v = std::min(lo_v, vals[i]);
    hi_v = std::max(hi_v, vals[i]);
  }
  const double range = hi_v - lo_v;
  const double mean_gap = (u_max - u_min) / static_cast<double>(probes.size() - 1);

  std::vector<double> breaks;
  if (range > 0.0) {
    // A jump candidate moves by a large fraction of the range over one probe
    // gap. Smooth-but-steep functions may trigger too; splitting there is
    // harmless since each segment is still integrated by quadrature.
    for (std::size_t i = 0; i + 1 < probes.size() && breaks.size() < 16; ++i) {
      const double gap = probes[i + 1] - probes[i];
      if (std::abs(vals[i + 1] - vals[i]) > 0.25 * range * std::max(1.0, gap / mean_gap))
        breaks.push_back(locate_jump(phi_at, probes[i], probes[i + 1]));
    }
  }

  GaussianAxis axis;
  if (breaks.empty()) {
    axis.nodes = rule.nodes;
    axis.weights = rule.weights;
  } else {
    // Segmented rule in CDF space: each smooth segment gets a mapped
    // Gauss-Legendre panel, so segment masses are carried exactly and
    // piecewise-constant integrands are integrated exactly.
    const QuadratureRule& gl = gauss_legendre_rule(rule.order);
    std::vector<double> t_edges;
    t_edges.push_back(0.0);
    for (double c : breaks) t_edges.push_back(normal_cdf(c));
    t_edges.push_back(1.0);
    for (std::size_t s = 0; s + 1 < t_edges.size(); ++s) {
      const double t0 = t_edges[s], t1 = t_edges[s + 1];
      const double half = 0.5 * (t1 - t0);
      if (half <= 0.0) continue;
      const double mid = 0.5 * (t0 + t1);
      for (int k = 0; k < gl.order; ++k) {
        axis.nodes.push_back(normal_quantile(mid + half * gl.nodes[k]));
        axis.weights.push_back(half * gl.weights[k]);
      }
    }
  }

  axis.phi.resize(axis.nodes.size());
  for (std::size_t i = 0; i < axis.nodes.size(); ++i) axis.phi[i] = phi_at(axis.nodes[i]);
  return axis;
}

}  // namespace detail

namespace {

MiPath resolve_path(const Activation& act, MiPath path) {
  if (path != MiPath::Auto) return path;
  if (act.kind == ActivationKind::Linear) return MiPath::Auto;  // closed form
  return act.piecewise_constant() ? MiPath::Levels : MiPath::Generic;
}

void check_mi_args(double r, double q, double rho_s) {
  if (!(r >= 0.0)) throw invalid_argument("output_mi: r must be >= 0");
  if (!(q >= -1e-12 && q <= rho_s + 1e-12))
    throw invalid_argument("output_mi: q must lie in [0, rho_s]");
}

// - E_Z ln sum_b w_b exp(-(r/2) d_b^2 - sqrt(r) d_b Z) for one realized
// output value; d_b = x_a - x_b. Log-sum-exp shifted by the running max.
template <class Values, class Weights>
double neg_log_evidence(double r, double x_a, const Values& x, const Weights& w,
                        const QuadratureRule& rule) {
  const std::size_t m = x.size();
  const double sqrt_r = std::sqrt(r);
  std::vector<double> quad(m), lin(m), lw(m);
  for (std::size_t b = 0; b < m; ++b) {
    const double d = x_a - x[b];
    quad[b] = -0.5 * r * d * d;
    lin[b] = -sqrt_r * d;
    lw[b] = w[b] > 0.0 ? std::log(w[b]) : -HUGE_VAL;
  }
  return -expect_gaussian_1d(rule, [&](double z) {
    double mx = -HUGE_VAL;
    for (std::size_t b = 0; b < m; ++b) {
      const double e = lw[b] + quad[b] + lin[b] * z;
      if (e > mx) mx = e;
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < m; ++b)
      if (w[b] > 0.0) sum += std::exp(lw[b] + quad[b] + lin[b] * z - mx);
    return mx + std::log(sum);
  });
}

// E_Z <phi>^2 for one realized output value (posterior mean of phi over the
// inner variable). At r = 0 the posterior equals the prior.
template <class Values, class Weights>
double posterior_sq(double r, double x_a, const Values& x, const Weights& w,
                    const QuadratureRule& rule) {
  const std::size_t m = x.size();
  if (r == 0.0) {
    double mean = 0.0;
    for (std::size_t b = 0; b < m; ++b) mean += w[b] * x[b];
    return mean * mean;
  }
  const double sqrt_r = std::sqrt(r);
  std::vector<double> quad(m), lin(m), lw(m);
  for (std::size_t b = 0; b < m; ++b) {
    const double d = x_a - x[b];
    quad[b] = -0.5 * r * d * d;
    lin[b] = -sqrt_r * d;
    lw[b] = w[b] > 0.0 ? std::log(w[b]) : -HUGE_VAL;
  }
  return expect_gaussian_1d(rule, [&](double z) {
    double mx = -HUGE_VAL;
    for (std::size_t b = 0; b < m; ++b) {
      const double e = lw[b] + quad[b] + lin[b] * z;
      if (e > mx) mx = e;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      if (w[b] <= 0.0) continue;
      const double e = std::exp(lw[b] + quad[b] + lin[b] * z - mx);
      num += e * x[b];
      den += e;
    }
    const double pm = num / den;
    return pm * pm;
  });
}

}  // namespace

double output_mi(const Activation& act, double r, double q, double rho_s,
                 const QuadratureRule& rule, MiPath path) {
  check_mi_args(r, q, rho_s);
  q = std::min(std::max(q, 0.0), rho_s);
  if (r == 0.0) return 0.0;
  if (rho_s - q <= kDegenerateQ * std::max(rho_s, 1.0)) return 0.0;

  const MiPath resolved = resolve_path(act, path);
  if (resolved == MiPath::Auto) return 0.5 * std::log1p(r * (rho_s - q));

  const double a = std::sqrt(rho_s - q);
  const double sq = std::sqrt(q);
  double mi = 0.0;
  if (resolved == MiPath::Levels) {
    if (!act.piecewise_constant())
      throw invalid_argument("output_mi: level path needs a piecewise-constant activation");
    mi = expect_gaussian_1d(rule, [&](double v) {
      const auto levels = levels_at(act, a, sq * v);
      std::vector<double> x(levels.size()), w(levels.size());
      for (std::size_t i = 0; i < levels.size(); ++i) {
        x[i] = levels[i].value;
        w[i] = levels[i].mass;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < levels.size(); ++i)
        if (w[i] > 0.0) acc += w[i] * neg_log_evidence(r, x[i], x, w, rule);
      return acc;
    });
  } else {
    mi = expect_gaussian_1d(rule, [&](double v) {
      const auto axis = detail::build_axis(act, a, sq * v, rule);
      double acc = 0.0;
      for (std::size_t i = 0; i < axis.nodes.size(); ++i)
        acc += axis.weights[i] * neg_log_evidence(r, axis.phi[i], axis.phi, axis.weights, rule);
      return acc;
    });
  }
  if (!std::isfinite(mi)) throw numeric_error("output_mi: non-finite result");
  return mi;
}

OutputMiDr output_mi_dr_detail(const Activation& act, double r, double q, double rho_s,
                               const QuadratureRule& rule, MiPath path) {
  check_mi_args(r, q, rho_s);
  q = std::min(std::max(q, 0.0), rho_s);

  OutputMiDr out;
  const MiPath resolved = resolve_path(act, path);
  if (resolved == MiPath::Auto) {  // Linear closed form
    out.phi_sq = rho_s;
    out.derivative = (rho_s - q) / (2.0 * (1.0 + r * (rho_s - q)));
    out.posterior_sq = rho_s - 2.0 * out.derivative;
    return out;
  }

  const double sq = std::sqrt(q);
  if (rho_s - q <= kDegenerateQ * std::max(rho_s, 1.0)) {
    // phi(sqrt(q) V) is V-measurable: the posterior mean equals the truth.
    out.phi_sq = expect_gaussian_1d(rule, [&](double v) {
      const double y = act(sq * v);
      return y * y;
    });
    out.posterior_sq = out.phi_sq;
    out.derivative = 0.0;
    return out;
  }

  const double a = std::sqrt(rho_s - q);
  double phi_sq = 0.0, post_sq = 0.0;
  if (resolved == MiPath::Levels) {
    phi_sq = expect_gaussian_1d(rule, [&](double v) {
      const auto levels = levels_at(act, a, sq * v);
      double acc = 0.0;
      for (const Level& lvl : levels) acc += lvl.mass * lvl.value * lvl.value;
      return acc;
    });
    post_sq = expect_gaussian_1d(rule, [&](double v) {
      const auto levels = levels_at(act, a, sq * v);
      std::vector<double> x(levels.size()), w(levels.size());
      for (std::size_t i = 0; i < levels.size(); ++i) {
        x[i] = levels[i].value;
        w[i] = levels[i].mass;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < levels.size(); ++i)
        if (w[i] > 0.0) acc += w[i] * posterior_sq(r, x[i], x, w, rule);
      return acc;
    });
  } else {
    phi_sq = expect_gaussian_1d(rule, [&](double v) {
      const auto axis = detail::build_axis(act, a, sq * v, rule);
      double acc = 0.0;
      for (std::size_t i = 0; i < axis.nodes.size(); ++i)
        acc += axis.weights[i] * axis.phi[i] * axis.phi[i];
      return acc;
    });
    post_sq = expect_gaussian_1d(rule, [&](double v) {
      const auto axis = detail::build_axis(act, a, sq * v, rule);
      double acc = 0.0;
      for (std::size_t i = 0; i < axis.nodes.size(); ++i)
        acc += axis.weights[i] * posterior_sq(r, axis.phi[i], axis.phi, axis.weights, rule);
      return acc;
    });
  }
  out.phi_sq = phi_sq;
  out.posterior_sq = post_sq;
  out.derivative = 0.5 * (phi_sq - post_sq);
  if (!std::isfinite(out.derivative)) throw numeric_error("output_mi_dr: non-finite result");
  return out;
}

double output_mi_dr(const Activation& act, double r, double q, double rho_s,
                    const QuadratureRule& rule, MiPath path) {
  return output_mi_dr_detail(act, r, q, rho_s, rule, path).derivative;
}

double output_mi_dq(const Activation& act, double r, double q, double rho_s,
                    const QuadratureRule& rule, double step, bool* warned) {
  check_mi_args(r, q, rho_s);
  if (r == 0.0) return 0.0;
  if (step <= 0.0) step = default_dq_step(rho_s);
  step = std::min(step, 0.5 * std::max(rho_s, 1e-30));

  double lo = q - step, hi = q + step;
  if (lo < 0.0) lo = q;    // one-sided at the lower edge
  if (hi > rho_s) hi = q;  // one-sided at the upper edge
  if (hi <= lo) return 0.0;

  const double f_hi = output_mi(act, r, hi, rho_s, rule);
  const double f_lo = output_mi(act, r, lo, rho_s, rule);
  const double d = (f_hi - f_lo) / (hi - lo);
  if (warned && d > 1e-6) *warned = true;
  return d;
}

}  // namespace glmtensor

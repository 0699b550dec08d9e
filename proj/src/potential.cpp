#include "glmtensor/potential.hpp"

#include <cmath>
#include <string>

#include "glmtensor/errors.hpp"

namespace glmtensor {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// 12-significant-digit quantization: mantissa rounded to 41 bits, packed
// with the binary exponent and sign.
std::int64_t quantize(double x) {
  if (x == 0.0) return 0;
  int e = 0;
  const double m = std::frexp(x, &e);
  const std::int64_t mant = std::llround(m * static_cast<double>(1ll << 41));
  return mant * 4096 + (e + 2048);
}

}  // namespace

ModelParams ModelParams::make(double lambda, double alpha, int rank, Prior prior,
                              Activation activation, int quad_order) {
  if (!(lambda >= 0.0)) throw invalid_argument("ModelParams: lambda must be >= 0");
  if (!(alpha > 0.0)) throw invalid_argument("ModelParams: alpha must be > 0");
  if (rank < 2) throw invalid_argument("ModelParams: rank must be >= 2");
  ModelParams p;
  p.lambda = lambda;
  p.alpha = alpha;
  p.rank = rank;
  p.prior = std::move(prior);
  p.activation = std::move(activation);
  p.quad_order = quad_order;
  p.rule = gauss_hermite_rule(quad_order);
  const Moments mom = moments(p.prior);
  p.m_s = mom.mean;
  p.rho_s = mom.second;
  p.rho_x = glmtensor::rho_x(p.activation, p.rho_s, p.rule);
  return p;
}

ModelParams ModelParams::with_lambda(double new_lambda) const {
  ModelParams p = *this;
  if (!(new_lambda >= 0.0)) throw invalid_argument("ModelParams: lambda must be >= 0");
  p.lambda = new_lambda;
  return p;
}

ModelParams ModelParams::with_alpha(double new_alpha) const {
  ModelParams p = *this;
  if (!(new_alpha > 0.0)) throw invalid_argument("ModelParams: alpha must be > 0");
  p.alpha = new_alpha;
  return p;
}

void check_box(const ModelParams& params, const OverlapPoint& pt) {
  const double slack = 1e-9;
  if (!(pt.q_x >= -slack && pt.q_x <= params.rho_x + slack * std::max(1.0, params.rho_x)))
    throw invalid_argument("overlap point: q_x outside [0, rho_x]");
  if (!(pt.q_s >= -slack && pt.q_s <= params.rho_s + slack * std::max(1.0, params.rho_s)))
    throw invalid_argument("overlap point: q_s outside [0, rho_s]");
  if (!(pt.r_s >= -slack)) throw invalid_argument("overlap point: r_s must be >= 0");
}

double channel_snr(const ModelParams& params, double q_x) {
  return params.lambda * std::pow(q_x, params.rank - 1) / factorial(params.rank - 1);
}

double tensor_term(double lambda, int rank, double rho_x, double q_x) {
  const double r = static_cast<double>(rank);
  const double qr = std::pow(q_x, rank);
  const double qr1 = std::pow(q_x, rank - 1);
  return lambda / (2.0 * factorial(rank)) *
         (std::pow(rho_x, rank) + (r - 1.0) * qr - r * qr1 * rho_x);
}

double psi(const ModelParams& params, const OverlapPoint& pt) {
  check_box(params, pt);
  const double q_s = std::min(std::max(pt.q_s, 0.0), params.rho_s);
  const double r_s = std::max(pt.r_s, 0.0);
  const double q_x = std::min(std::max(pt.q_x, 0.0), params.rho_x);
  const double r = channel_snr(params, q_x);
  return scalar_mi(params.prior, r_s, params.rule) / params.alpha +
         output_mi(params.activation, r, q_s, params.rho_s, params.rule) -
         r_s * (params.rho_s - q_s) / (2.0 * params.alpha) +
         tensor_term(params.lambda, params.rank, params.rho_x, q_x);
}

double psi_tilde(double alpha, double r, double r_s, double q_s, const Prior& prior,
                 const Activation& activation, const QuadratureRule& rule) {
  if (!(r >= 0.0 && r_s >= 0.0 && q_s >= 0.0))
    throw invalid_argument("psi_tilde: arguments must be nonnegative");
  const Moments mom = moments(prior);
  if (q_s > mom.second + 1e-12) throw invalid_argument("psi_tilde: q_s must be <= rho_s");
  return scalar_mi(prior, r_s, rule) +
         alpha * output_mi(activation, r, q_s, mom.second, rule) -
         r_s * (mom.second - q_s) / 2.0;
}

double psi_limit(double lambda, double q_x, const Prior& prior, const Activation& activation,
                 const QuadratureRule& rule) {
  const Moments mom = moments(prior);
  const double rho = glmtensor::rho_x(activation, mom.second, rule);
  if (!(q_x >= 0.0 && q_x <= rho + 1e-12))
    throw invalid_argument("psi_limit: q_x must lie in [0, rho_x]");
  const double ms2 = mom.mean * mom.mean;
  return output_mi(activation, lambda * q_x * q_x / 2.0, ms2, mom.second, rule) +
         tensor_term(lambda, 3, rho, q_x);
}

PotentialEvaluator::PotentialEvaluator(ModelParams params) : params_(std::move(params)) {}

template <class Value, class Compute>
Value PotentialEvaluator::cached(std::unordered_map<Key, Value, KeyHash>& map, Key key,
                                 Compute&& compute) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = map.find(key);
    if (it != map.end()) return it->second;
  }
  Value v = compute();
  std::lock_guard<std::mutex> lock(mutex_);
  return map.emplace(key, v).first->second;
}

double PotentialEvaluator::scalar_mi(double r_s) const {
  return cached(scalar_mi_cache_, Key{quantize(r_s), 0},
                [&] { return glmtensor::scalar_mi(params_.prior, r_s, params_.rule); });
}

double PotentialEvaluator::scalar_mmse(double r_s) const {
  return cached(scalar_mmse_cache_, Key{quantize(r_s), 0},
                [&] { return glmtensor::scalar_mmse(params_.prior, r_s, params_.rule); });
}

double PotentialEvaluator::output_mi(double r, double q_s) const {
  return cached(mi_cache_, Key{quantize(r), quantize(q_s)}, [&] {
    return glmtensor::output_mi(params_.activation, r, q_s, params_.rho_s, params_.rule);
  });
}

OutputMiDr PotentialEvaluator::output_mi_dr(double r, double q_s) const {
  return cached(dr_cache_, Key{quantize(r), quantize(q_s)}, [&] {
    return glmtensor::output_mi_dr_detail(params_.activation, r, q_s, params_.rho_s,
                                          params_.rule);
  });
}

double PotentialEvaluator::output_mi_dq(double r, double q_s, double step) const {
  if (r == 0.0) return 0.0;
  if (step <= 0.0) step = default_dq_step(params_.rho_s);
  step = std::min(step, 0.5 * std::max(params_.rho_s, 1e-30));
  double lo = q_s - step, hi = q_s + step;
  if (lo < 0.0) lo = q_s;
  if (hi > params_.rho_s) hi = q_s;
  if (hi <= lo) return 0.0;
  return (output_mi(r, hi) - output_mi(r, lo)) / (hi - lo);
}

double PotentialEvaluator::psi(const OverlapPoint& pt) const {
  check_box(params_, pt);
  const double q_s = std::min(std::max(pt.q_s, 0.0), params_.rho_s);
  const double r_s = std::max(pt.r_s, 0.0);
  const double q_x = std::min(std::max(pt.q_x, 0.0), params_.rho_x);
  const double r = channel_snr(params_, q_x);
  return scalar_mi(r_s) / params_.alpha + output_mi(r, q_s) -
         r_s * (params_.rho_s - q_s) / (2.0 * params_.alpha) +
         tensor_term(params_.lambda, params_.rank, params_.rho_x, q_x);
}

}  // namespace glmtensor

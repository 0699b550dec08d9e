#include "glmtensor/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "glmtensor/errors.hpp"
#include "glmtensor/parallel.hpp"
#include "glmtensor/rng.hpp"

namespace glmtensor {

namespace {

using nlohmann::json;

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

void check_oracle_args(const ModelParams& params, int n, int p) {
  if (!params.prior.discrete())
    throw unsupported_error("oracle: posterior enumeration needs a finite-support prior");
  if (n < 1 || n > 64) throw invalid_argument("oracle: n must be in [1, 64]");
  if (p < 1 || p > 20) throw invalid_argument("oracle: p must be in [1, 20]");
}

std::int64_t config_count(const ModelParams& params, int p) {
  const std::int64_t m = static_cast<std::int64_t>(params.prior.values.size());
  std::int64_t count = 1;
  for (int i = 0; i < p; ++i) {
    count *= m;
    if (count > (1 << 20))
      throw unsupported_error("oracle: |support|^p exceeds 2^20 configurations");
  }
  return count;
}

double tensor_scale(const Instance& inst) {
  return std::sqrt(inst.lambda) * std::pow(static_cast<double>(inst.n), -(inst.rank - 1) / 2.0);
}

// Walks all latent configurations in mixed-radix order; digits index the
// prior support. fn(log_prior, s_config).
template <class Fn>
void for_each_config(const Prior& prior, int p, Fn&& fn) {
  const std::size_t m = prior.values.size();
  std::vector<int> digits(p, 0);
  std::vector<double> s(p, prior.values[0]);
  std::vector<double> log_prob(m);
  for (std::size_t i = 0; i < m; ++i)
    log_prob[i] = prior.probabilities[i] > 0.0 ? std::log(prior.probabilities[i]) : -HUGE_VAL;
  double log_prior = p * log_prob[0];
  for (;;) {
    fn(log_prior, s);
    int pos = 0;
    while (pos < p) {
      log_prior -= log_prob[digits[pos]];
      if (++digits[pos] < static_cast<int>(m)) {
        s[pos] = prior.values[digits[pos]];
        log_prior += log_prob[digits[pos]];
        break;
      }
      digits[pos] = 0;
      s[pos] = prior.values[0];
      log_prior += log_prob[0];
      ++pos;
    }
    if (pos == p) return;
  }
}

// x = phi(W s / sqrt(p)) for one configuration.
void spike_of(const ModelParams& params, const Instance& inst, const std::vector<double>& s,
              std::vector<double>& x) {
  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(inst.p));
  for (int i = 0; i < inst.n; ++i) {
    double dot = 0.0;
    const double* row = inst.W.data() + static_cast<std::size_t>(i) * inst.p;
    for (int j = 0; j < inst.p; ++j) dot += row[j] * s[j];
    x[i] = params.activation(dot * inv_sqrt_p);
  }
}

// -1/2 sum_i (Y_i - scale * prod x)^2 over ordered tuples.
double log_likelihood(const Instance& inst, const std::vector<double>& x, double scale) {
  double acc = 0.0;
  const std::size_t count = inst.tuple_count();
  const int r = inst.rank;
  for (std::size_t t = 0; t < count; ++t) {
    double prod = scale;
    const int* idx = inst.tuples.data() + t * r;
    for (int k = 0; k < r; ++k) prod *= x[idx[k]];
    const double diff = inst.Y[t] - prod;
    acc -= 0.5 * diff * diff;
  }
  return acc;
}

double log_sum_exp(const std::vector<double>& v) {
  double mx = -HUGE_VAL;
  for (double e : v) mx = std::max(mx, e);
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double e : v) sum += std::exp(e - mx);
  return mx + std::log(sum);
}

McEstimate mc_over_instances(const ModelParams& params, int n, int p, int n_samples,
                             std::uint64_t seed, int threads,
                             double (*value)(const ModelParams&, const Instance&)) {
  check_oracle_args(params, n, p);
  config_count(params, p);
  if (n_samples < 1) throw invalid_argument("oracle: n_samples must be >= 1");

  std::vector<double> values(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t k) {
    const Instance inst = sample_instance(params, n, p, seed ^ static_cast<std::uint64_t>(k));
    values[k] = value(params, inst);
  });

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n_samples;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = n_samples > 1 ? var / (n_samples - 1.0) : 0.0;
  return {mean, std::sqrt(var / n_samples), n_samples};
}

}  // namespace

std::vector<int> ordered_tuples(int n, int rank) {
  std::vector<int> out;
  std::vector<int> idx(rank, 0);
  for (;;) {
    out.insert(out.end(), idx.begin(), idx.end());
    int pos = rank - 1;
    while (pos >= 0 && idx[pos] == n - 1) --pos;
    if (pos < 0) break;
    const int v = idx[pos] + 1;
    for (int k = pos; k < rank; ++k) idx[k] = v;  // keep i_1 <= ... <= i_r
  }
  return out;
}

Instance sample_instance(const ModelParams& params, int n, int p, std::uint64_t seed) {
  check_oracle_args(params, n, p);
  Instance inst;
  inst.n = n;
  inst.p = p;
  inst.rank = params.rank;
  inst.lambda = params.lambda;
  inst.seed = seed;
  inst.tuples = ordered_tuples(n, params.rank);

  SplitMix64 rng(seed);
  inst.W.resize(static_cast<std::size_t>(n) * p);
  for (double& w : inst.W) w = rng.normal();
  inst.S.resize(p);
  for (int j = 0; j < p; ++j) {
    // inverse-CDF draw over the finite support
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = params.prior.values.size() - 1;
    for (std::size_t i = 0; i < params.prior.values.size(); ++i) {
      acc += params.prior.probabilities[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    inst.S[j] = params.prior.values[pick];
  }
  inst.X.resize(n);
  spike_of(params, inst, inst.S, inst.X);

  const std::size_t count = inst.tuples.size() / params.rank;
  inst.Y.resize(count);
  inst.Z.resize(count);
  const double scale = tensor_scale(inst);
  for (std::size_t t = 0; t < count; ++t) {
    double prod = scale;
    const int* idx = inst.tuples.data() + t * params.rank;
    for (int k = 0; k < params.rank; ++k) prod *= inst.X[idx[k]];
    inst.Z[t] = rng.normal();
    inst.Y[t] = prod + inst.Z[t];
  }
  return inst;
}

std::vector<double> posterior_log_weights(const ModelParams& params, const Instance& inst) {
  const std::int64_t count = config_count(params, inst.p);
  std::vector<double> log_w;
  log_w.reserve(count);
  std::vector<double> x(inst.n);
  const double scale = tensor_scale(inst);
  for_each_config(params.prior, inst.p, [&](double log_prior, const std::vector<double>& s) {
    spike_of(params, inst, s, x);
    log_w.push_back(log_prior + log_likelihood(inst, x, scale));
  });
  return log_w;
}

double instance_mi_value(const ModelParams& params, const Instance& inst) {
  // ln p(Y | S, W) reduces to -1/2 sum Z^2 (shared norm constants cancel).
  double true_ll = 0.0;
  for (double z : inst.Z) true_ll -= 0.5 * z * z;
  const std::vector<double> log_w = posterior_log_weights(params, inst);
  return (true_ll - log_sum_exp(log_w)) / inst.n;
}

double instance_mmse_value(const ModelParams& params, const Instance& inst) {
  const std::vector<double> log_w = posterior_log_weights(params, inst);
  const double evidence = log_sum_exp(log_w);

  const std::size_t count = inst.tuple_count();
  const int r = inst.rank;
  std::vector<double> post_mean(count, 0.0);
  std::vector<double> x(inst.n);
  std::size_t c = 0;
  for_each_config(params.prior, inst.p, [&](double, const std::vector<double>& s) {
    const double w = std::exp(log_w[c++] - evidence);
    if (w > 0.0) {
      spike_of(params, inst, s, x);
      for (std::size_t t = 0; t < count; ++t) {
        double prod = w;
        const int* idx = inst.tuples.data() + t * r;
        for (int k = 0; k < r; ++k) prod *= x[idx[k]];
        post_mean[t] += prod;
      }
    }
  });

  double err = 0.0;
  for (std::size_t t = 0; t < count; ++t) {
    double truth = 1.0;
    const int* idx = inst.tuples.data() + t * r;
    for (int k = 0; k < r; ++k) truth *= inst.X[idx[k]];
    const double diff = truth - post_mean[t];
    err += diff * diff;
  }
  return err / std::pow(static_cast<double>(inst.n), r);
}

McEstimate mc_mutual_information(const ModelParams& params, int n, int p, int n_samples,
                                 std::uint64_t seed, int threads) {
  return mc_over_instances(params, n, p, n_samples, seed, threads, instance_mi_value);
}

McEstimate mc_tensor_mmse(const ModelParams& params, int n, int p, int n_samples,
                          std::uint64_t seed, int threads) {
  return mc_over_instances(params, n, p, n_samples, seed, threads, instance_mmse_value);
}

ImmseReport immse_check(const ModelParams& params, int n, int p, int n_samples, double dlambda,
                        std::uint64_t seed, int threads) {
  check_oracle_args(params, n, p);
  if (!(dlambda > 0.0)) throw invalid_argument("immse_check: dlambda must be > 0");

  ImmseReport rep;
  rep.lambda = params.lambda;
  rep.dlambda = dlambda;
  rep.n = n;
  rep.p = p;

  double lam_lo = params.lambda - 0.5 * dlambda;
  double lam_hi = params.lambda + 0.5 * dlambda;
  if (lam_lo < 0.0) {  // one-sided at the domain edge
    lam_lo = params.lambda;
    lam_hi = params.lambda + dlambda;
  }
  const ModelParams lo = params.with_lambda(lam_lo);
  const ModelParams hi = params.with_lambda(lam_hi);

  // Common random numbers: the same (W, S, Z) stream at both lambdas, so the
  // per-sample difference has far smaller variance than the two MI estimates.
  std::vector<double> diffs(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t k) {
    const std::uint64_t s = seed ^ static_cast<std::uint64_t>(k);
    const double v_hi = instance_mi_value(hi, sample_instance(hi, n, p, s));
    const double v_lo = instance_mi_value(lo, sample_instance(lo, n, p, s));
    diffs[k] = (v_hi - v_lo) / (lam_hi - lam_lo);
  });
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= n_samples;
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var = n_samples > 1 ? var / (n_samples - 1.0) : 0.0;
  rep.di_dlambda = mean;
  rep.di_dlambda_se = std::sqrt(var / n_samples);

  const double divisor = 2.0 * factorial(params.rank);
  const McEstimate mmse = mc_tensor_mmse(params, n, p, n_samples, seed, threads);
  rep.mmse_scaled = mmse.estimate / divisor;
  rep.mmse_scaled_se = mmse.std_error / divisor;

  rep.combined_se =
      std::sqrt(rep.di_dlambda_se * rep.di_dlambda_se + rep.mmse_scaled_se * rep.mmse_scaled_se);
  rep.slack = 2.0 / n;
  rep.pass =
      std::abs(rep.di_dlambda - rep.mmse_scaled) <= 3.0 * rep.combined_se + rep.slack;
  return rep;
}

std::string serialize_instance(const Instance& inst, bool include_tensors) {
  json j;
  j["format"] = "glmtensor.instance.v1";
  j["n"] = inst.n;
  j["p"] = inst.p;
  j["rank"] = inst.rank;
  j["lambda"] = inst.lambda;
  j["seed"] = inst.seed;
  if (include_tensors) {
    j["W"] = inst.W;
    j["S"] = inst.S;
    j["X"] = inst.X;
    j["Y"] = inst.Y;
    j["Z"] = inst.Z;
  }
  return j.dump();
}

Instance deserialize_instance(const std::string& blob, const ModelParams& params) {
  json j = json::parse(blob);
  if (j.value("format", "") != "glmtensor.instance.v1")
    throw invalid_argument("deserialize_instance: unknown blob format");
  const int n = j.at("n").get<int>();
  const int p = j.at("p").get<int>();
  const int rank = j.at("rank").get<int>();
  const double lambda = j.at("lambda").get<double>();
  const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
  if (rank != params.rank || std::abs(lambda - params.lambda) > 1e-15 * std::max(1.0, lambda))
    throw invalid_argument("deserialize_instance: blob does not match the model parameters");
  Instance inst = sample_instance(params, n, p, seed);
  if (j.contains("Y")) {
    const auto y = j.at("Y").get<std::vector<double>>();
    if (y.size() != inst.Y.size())
      throw invalid_argument("deserialize_instance: stored tensor size mismatch");
    for (std::size_t t = 0; t < y.size(); ++t)
      if (y[t] != inst.Y[t])
        throw invalid_argument("deserialize_instance: stored tensor disagrees with seed");
  }
  return inst;
}

}  // namespace glmtensor

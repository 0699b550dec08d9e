#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "glmtensor/activation.hpp"
#include "glmtensor/prior.hpp"
#include "glmtensor/quadrature.hpp"

namespace glmtensor {

/// Full problem specification with derived quantities cached at construction.
struct ModelParams {
  double lambda = 1.0;  // SNR
  double alpha = 1.0;   // n / p
  int rank = 3;
  Prior prior;
  Activation activation;
  int quad_order = kDefaultQuadOrder;

  // derived, kept consistent with prior/activation by make()
  double m_s = 0.0;
  double rho_s = 0.0;
  double rho_x = 0.0;
  QuadratureRule rule;

  static ModelParams make(double lambda, double alpha, int rank, Prior prior,
                          Activation activation, int quad_order = kDefaultQuadOrder);
  ModelParams with_lambda(double lambda) const;
  ModelParams with_alpha(double alpha) const;
};

/// Variational coordinates of the inf-inf-sup problem.
struct OverlapPoint {
  double q_x = 0.0;  // in [0, rho_x]
  double q_s = 0.0;  // in [0, rho_s]
  double r_s = 0.0;  // >= 0
};

/// Throws invalid_argument when pt violates the box (small slack for rounding).
void check_box(const ModelParams& params, const OverlapPoint& pt);

/// SNR of the effective output channel: lambda q_x^{rank-1} / (rank-1)!.
double channel_snr(const ModelParams& params, double q_x);

/// (lambda / (2 rank!)) (rho_x^r + (r-1) q_x^r - r q_x^{r-1} rho_x); at
/// rank 3 this equals (lambda/12) (rho_x - q_x)^2 (rho_x + 2 q_x) identically
/// and at rank 2 it reduces to (lambda/4) (rho_x - q_x)^2.
double tensor_term(double lambda, int rank, double rho_x, double q_x);

/// The replica-symmetric potential psi_{lambda,alpha}(q_x, q_s, r_s).
double psi(const ModelParams& params, const OverlapPoint& pt);

/// The GLM potential: I(S; sqrt(r_s) S + Z) + alpha I_phi(r, q_s; rho_s)
/// - r_s (rho_s - q_s) / 2.
double psi_tilde(double alpha, double r, double r_s, double q_s, const Prior& prior,
                 const Activation& activation, const QuadratureRule& rule);

/// The alpha -> 0 objective at rank 3:
/// I_phi(lambda q_x^2 / 2, m_s^2; rho_s) + (lambda/12)(rho_x - q_x)^2 (rho_x + 2 q_x).
double psi_limit(double lambda, double q_x, const Prior& prior, const Activation& activation,
                 const QuadratureRule& rule);

/// Memoizing facade over the information functionals for one ModelParams.
/// Sub-evaluations are cached keyed on arguments quantized to 12 significant
/// digits; the cache is guarded by a mutex so instances may be shared across
/// threads (sweeps normally give each worker its own evaluator instead).
class PotentialEvaluator {
 public:
  explicit PotentialEvaluator(ModelParams params);

  const ModelParams& params() const { return params_; }

  double scalar_mi(double r_s) const;
  double scalar_mmse(double r_s) const;
  double output_mi(double r, double q_s) const;
  OutputMiDr output_mi_dr(double r, double q_s) const;
  double output_mi_dq(double r, double q_s, double step = 0.0) const;
  double psi(const OverlapPoint& pt) const;

 private:
  struct Key {
    std::int64_t a = 0, b = 0;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<std::int64_t>()(k.a * 0x9e3779b97f4a7c15ull + k.b);
    }
  };
  template <class Value, class Compute>
  Value cached(std::unordered_map<Key, Value, KeyHash>& map, Key key, Compute&& compute) const;

  ModelParams params_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<Key, double, KeyHash> mi_cache_;
  mutable std::unordered_map<Key, OutputMiDr, KeyHash> dr_cache_;
  mutable std::unordered_map<Key, double, KeyHash> scalar_mi_cache_;
  mutable std::unordered_map<Key, double, KeyHash> scalar_mmse_cache_;
};

}  // namespace glmtensor

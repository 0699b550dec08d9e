#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glmtensor/potential.hpp"

namespace glmtensor {

/// One finite-size realization of the model: Y = sqrt(lambda) n^{-(r-1)/2}
/// X^{(x) r} + Z observed on ordered index tuples i_1 <= ... <= i_r, with
/// X = phi(W S / sqrt(p)). Regenerating from (seed, n, p, lambda, rank)
/// reproduces the instance bit-exactly.
struct Instance {
  int n = 0, p = 0, rank = 3;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> W;       // n x p, row-major
  std::vector<double> S;       // p
  std::vector<double> X;       // n
  std::vector<int> tuples;     // ordered index tuples, flattened (count * rank)
  std::vector<double> Y;       // one entry per tuple
  std::vector<double> Z;       // the noise that produced Y
  std::size_t tuple_count() const { return Y.size(); }
};

/// Lexicographically ordered nondecreasing index tuples of length rank
/// over [0, n), flattened.
std::vector<int> ordered_tuples(int n, int rank);

/// Draws W, S, Z from the SplitMix64 stream seeded with seed (W row-major,
/// then S, then Z in tuple order) and assembles X and Y. The prior must have
/// finite support (posterior enumeration), p <= 20, n <= 64.
Instance sample_instance(const ModelParams& params, int n, int p, std::uint64_t seed);

/// ln posterior weights over all |support|^p latent configurations
/// (unnormalized by the evidence; use log_sum_exp to normalize).
std::vector<double> posterior_log_weights(const ModelParams& params, const Instance& inst);

/// Per-instance integrand of the normalized mutual information:
/// [ln p(Y | S, W) - ln p(Y | W)] / n with the inner evidence enumerated
/// exactly over latent configurations.
double instance_mi_value(const ModelParams& params, const Instance& inst);

/// Per-instance squared error of the exact posterior-mean tensor estimator,
/// ||X^{(x)r} - E[x^{(x)r} | Y, W]||^2 / n^r over ordered tuples.
double instance_mmse_value(const ModelParams& params, const Instance& inst);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

inline constexpr int kDefaultMiSamples = 2000;
inline constexpr int kDefaultMmseSamples = 500;

/// Monte-Carlo estimate of I(X; Y | W) / n over n_samples independent
/// instances; instance k uses the stream seeded with seed ^ k.
McEstimate mc_mutual_information(const ModelParams& params, int n, int p, int n_samples,
                                 std::uint64_t seed, int threads = 1);

/// Monte-Carlo estimate of MMSE_n(X^{(x)r} | Y, W) with the inner conditional
/// expectation computed exactly per instance.
McEstimate mc_tensor_mmse(const ModelParams& params, int n, int p, int n_samples,
                          std::uint64_t seed, int threads = 1);

struct ImmseReport {
  double lambda = 0.0, dlambda = 0.0;
  int n = 0, p = 0;
  double di_dlambda = 0.0;      // central difference of I/n in lambda
  double di_dlambda_se = 0.0;   // paired (common random numbers) standard error
  double mmse_scaled = 0.0;     // MMSE estimate / (2 rank!)
  double mmse_scaled_se = 0.0;
  double combined_se = 0.0;
  double slack = 0.0;  // 2/n allowance for the O(1/n) term
  bool pass = false;
};

/// Checks d/dlambda (I/n) = MMSE / (2 rank!) + O(1/n) by a paired central
/// difference of the MC mutual information against the MC tensor-MMSE at the
/// midpoint; passes within 3 combined standard errors plus 2/n.
ImmseReport immse_check(const ModelParams& params, int n, int p, int n_samples,
                        double dlambda, std::uint64_t seed, int threads = 1);

/// JSON blob with seed + dimensions (always) and the full tensors on request.
std::string serialize_instance(const Instance& inst, bool include_tensors = false);
/// Rebuilds an instance from its JSON blob; regenerates the tensors from the
/// seed when the blob carries only dimensions, verifying stored tensors
/// otherwise.
Instance deserialize_instance(const std::string& blob, const ModelParams& params);

}  // namespace glmtensor

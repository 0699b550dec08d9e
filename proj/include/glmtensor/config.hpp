#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glmtensor/errors.hpp"
#include "glmtensor/observables.hpp"
#include "glmtensor/oracle.hpp"
#include "glmtensor/solver.hpp"

namespace glmtensor {

// Malformed configuration (unknown keys, bad values, schema violations).
class config_error : public invalid_argument {
 public:
  explicit config_error(const std::string& msg) : invalid_argument(msg) {}
};

/// Command-line overrides; every field beats the config-file value.
struct CliOverrides {
  std::optional<std::string> prior_kind;
  std::optional<double> prior_mean, prior_variance;
  std::optional<double> v_plus, v_minus, p_plus;
  std::optional<std::string> activation_kind;
  std::optional<double> epsilon;
  std::optional<int> rank;
  std::optional<double> lambda_value, alpha_value;
  std::optional<int> quad_order;
  std::optional<double> lambda_min, lambda_max;
  std::optional<int> lambda_count;
  std::optional<double> q_x, q_s, r_s;
  std::optional<int> oracle_n, oracle_p, samples;
  std::optional<double> dlambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, basename;
  std::optional<std::vector<std::string>> formats;
  std::optional<int> threads;
  std::optional<bool> detect_transition;
  std::optional<bool> warm_start;
};

/// Fully resolved run: every default made explicit. `resolved` is the
/// canonical JSON echo (sorted keys) and `hash` its FNV-1a fingerprint.
struct RunConfig {
  std::string command;
  double lambda = 1.0;
  double alpha = 1.0;
  int rank = 3;
  int quad_order = kDefaultQuadOrder;
  Prior prior = Prior::gaussian(0.0, 1.0);
  Activation activation = Activation::linear();
  FixedPointConfig solver;
  std::vector<double> lambda_values;
  std::vector<double> alpha_values;
  double jump_threshold = 0.0;  // 0 -> 0.05 * rho_x
  bool detect_transition = false;
  bool warm_start = false;
  OverlapPoint point;  // `potential` command
  int oracle_n = 12, oracle_p = 6;
  int mi_samples = kDefaultMiSamples;
  int mmse_samples = kDefaultMmseSamples;
  double dlambda = 0.5;
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  std::string basename = "run";
  std::vector<std::string> formats = {"csv", "json"};
  int threads = 0;  // 0 -> GLMTENSOR_THREADS env or hardware concurrency

  nlohmann::json resolved;
  std::string hash;

  ModelParams model() const;
};

/// Parses + validates a config JSON (unknown keys rejected at every level),
/// applies CLI overrides, fills defaults and computes the canonical echo.
RunConfig resolve_config(const nlohmann::json& file_config, const std::string& command,
                         const CliOverrides& overrides);

/// Reads GLMTENSOR_THREADS; 0 when unset or unparsable.
int env_thread_default();

}  // namespace glmtensor

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "glmtensor/solver.hpp"

namespace glmtensor {

/// ModelParams minus (lambda, alpha): the axes of a sweep.
struct SweepTemplate {
  int rank = 3;
  Prior prior;
  Activation activation;
  int quad_order = kDefaultQuadOrder;

  ModelParams instantiate(double lambda, double alpha) const;
  static SweepTemplate from(const ModelParams& params);
};

struct PhasePoint {
  double lambda = 0.0;
  double alpha = 0.0;
  double q_x = 0.0;
  double q_s = 0.0;
  double r_s = 0.0;
  double psi = 0.0;
  double mmse = 0.0;  // rho_x^r - q_x^r
  bool near_degenerate = false;
};

struct SweepIssue {
  std::size_t index = 0;  // position in the requested grid
  std::string message;
};

struct SweepResult {
  std::vector<PhasePoint> points;  // successfully solved grid cells, grid order
  std::vector<SweepIssue> errors;
  std::vector<std::string> warnings;  // monotonicity violations, hysteresis note
};

struct SweepOptions {
  bool warm_start = false;  // seeds each solve with the previous point; can
                            // track metastable branches through first-order
                            // transitions and misreport lambda_c
  int threads = 1;
};

/// One independently solved PhasePoint per lambda (no warm start by default).
/// q_x monotonicity violations beyond 1e-6 are recorded as warnings.
SweepResult sweep_lambda(const SweepTemplate& tmpl, double alpha,
                         const std::vector<double>& lambda_values, const FixedPointConfig& cfg,
                         const SweepOptions& options = {});

/// Row-major sweep over (alpha, lambda); cells are independent.
SweepResult sweep_phase_diagram(const SweepTemplate& tmpl,
                                const std::vector<double>& alpha_values,
                                const std::vector<double>& lambda_values,
                                const FixedPointConfig& cfg, const SweepOptions& options = {});

struct LambdaC {
  double lambda_c = 0.0;
  bool is_discontinuous = false;
};

inline double default_jump_threshold(double rho_x) { return 0.05 * rho_x; }

/// Locates the first departure of q_x^* along the curve (a jump larger than
/// jump_threshold, or leaving the q_x = 0 branch), refines the bracketing
/// lambda interval by bisection (re-solving at midpoints) to width 1e-3, and
/// classifies the transition: discontinuous when the jump across the refined
/// bracket still exceeds jump_threshold. Returns nullopt when q_x^* never
/// departs in range.
std::optional<LambdaC> detect_lambda_c(const SweepTemplate& tmpl, double alpha,
                                       const std::vector<PhasePoint>& curve,
                                       const FixedPointConfig& cfg, double jump_threshold);

struct LimitPoint {
  double lambda = 0.0;
  double q_x = 0.0;
  double mmse = 0.0;  // rho_x^3 - q_x^3
};

/// The alpha -> 0 curve at rank 3: per lambda, psi_limit minimized over q_x.
std::vector<LimitPoint> limit_curve(const std::vector<double>& lambda_values,
                                    const Prior& prior, const Activation& activation,
                                    const QuadratureRule& rule);

}  // namespace glmtensor

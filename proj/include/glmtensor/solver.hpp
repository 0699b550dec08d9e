#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glmtensor/potential.hpp"

namespace glmtensor {

struct FixedPointConfig {
  double damping = 0.5;
  double tol = 1e-9;  // max componentwise change
  int max_iter = 2000;
  std::vector<OverlapPoint> extra_inits;  // the two anchor inits are always used
  int random_inits = 3;
  std::uint64_t init_seed = 0x5eedc0de;
  int grid_nx = 64;
  int grid_ns = 64;
  bool force_grid = false;  // run the grid fallback even when starts converge
  double dq_step = 0.0;     // 0 -> 1e-4 * max(rho_s, 1)
  double r_cap = kDefaultRsCap;
};

/// Below this alpha the 1/alpha terms destroy conditioning and the
/// variational problem is replaced by its alpha -> 0 limit.
inline constexpr double kAlphaLimitThreshold = 1e-10;

struct SolveResult {
  OverlapPoint point;
  double psi_value = 0.0;
  bool converged = false;
  int iterations = 0;
  int branch_id = 0;
  bool near_degenerate = false;  // two branches within 1e-9 in psi
};

/// One damped step of the stationary-point map
///   q_x <- E[<phi>^2] (= rho_x - 2 dI_phi/dr),  q_s <- rho_s - mmse(r_s),
///   r_s <- max(0, -2 alpha dI_phi/dq),
/// then new = damping * update + (1 - damping) * pt, clamped to the box.
OverlapPoint fixed_point_step(const ModelParams& params, const OverlapPoint& pt,
                              const FixedPointConfig& cfg);

/// Multi-start damped fixed-point iteration with a (q_x, q_s) grid fallback;
/// returns the stationary point of smallest psi. When the two best branches
/// are within 1e-9 in psi the larger-q_x branch is reported and
/// near_degenerate is set. alpha <= 1e-10 is routed to the limiting solver.
SolveResult solve_variational(const ModelParams& params, const FixedPointConfig& cfg);

/// h(lambda): the value of the variational problem.
double mutual_information(const ModelParams& params, const FixedPointConfig& cfg);

/// Asymptotic tensor-MMSE rho_x^r - (q_x^*)^r. near_degenerate (lambda at a
/// transition) is surfaced through the optional out-parameter.
double tensor_mmse(const ModelParams& params, const FixedPointConfig& cfg,
                   bool* near_degenerate = nullptr);

struct LimitResult {
  double q_x = 0.0;
  double psi_value = 0.0;
  double mmse = 0.0;  // rho_x^r - q_x^r
  bool near_degenerate = false;
};

/// Minimizes the alpha -> 0 objective over q_x (coarse scan, golden-section
/// refinement, then the one-dimensional overlap fixed point). Rank given by
/// params.rank; the scalar-channel block is frozen at (q_s, r_s) = (m_s^2, 0).
LimitResult solve_limit(const ModelParams& params, const FixedPointConfig& cfg);

/// Numerical Jacobian of the undamped update map at pt (diagnostic only).
std::array<std::array<double, 3>, 3> fixed_point_jacobian(const ModelParams& params,
                                                          const OverlapPoint& pt,
                                                          const FixedPointConfig& cfg,
                                                          double h = 1e-6);

}  // namespace glmtensor

#include "glmtensor/observables.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glmtensor/errors.hpp"
#include "glmtensor/parallel.hpp"

namespace glmtensor {

namespace {

PhasePoint make_phase_point(const ModelParams& params, const SolveResult& res) {
  PhasePoint pt;
  pt.lambda = params.lambda;
  pt.alpha = params.alpha;
  pt.q_x = res.point.q_x;
  pt.q_s = res.point.q_s;
  pt.r_s = res.point.r_s;
  pt.psi = res.psi_value;
  pt.mmse = std::pow(params.rho_x, params.rank) - std::pow(res.point.q_x, params.rank);
  pt.near_degenerate = res.near_degenerate;
  return pt;
}

}  // namespace

ModelParams SweepTemplate::instantiate(double lambda, double alpha) const {
  return ModelParams::make(lambda, alpha, rank, prior, activation, quad_order);
}

SweepTemplate SweepTemplate::from(const ModelParams& params) {
  return {params.rank, params.prior, params.activation, params.quad_order};
}

SweepResult sweep_lambda(const SweepTemplate& tmpl, double alpha,
                         const std::vector<double>& lambda_values, const FixedPointConfig& cfg,
                         const SweepOptions& options) {
  if (lambda_values.empty()) throw invalid_argument("sweep_lambda: empty lambda grid");
  for (std::size_t i = 1; i < lambda_values.size(); ++i)
    if (!(lambda_values[i] > lambda_values[i - 1]))
      throw invalid_argument("sweep_lambda: lambda grid must be strictly increasing");

  SweepResult result;
  std::vector<std::optional<PhasePoint>> slots(lambda_values.size());
  std::vector<std::string> issues(lambda_values.size());

  if (options.warm_start) {
    result.warnings.push_back(
        "warm-start sweep: solutions may track metastable branches through first-order "
        "transitions; lambda_c from this curve can be hysteretic");
    FixedPointConfig warm = cfg;
    for (std::size_t i = 0; i < lambda_values.size(); ++i) {
      try {
        const ModelParams params = tmpl.instantiate(lambda_values[i], alpha);
        const SolveResult res = solve_variational(params, warm);
        slots[i] = make_phase_point(params, res);
        warm.extra_inits = {res.point};
      } catch (const std::exception& e) {
        issues[i] = e.what();
      }
    }
  } else {
    parallel_for(lambda_values.size(), options.threads, [&](std::size_t i) {
      try {
        const ModelParams params = tmpl.instantiate(lambda_values[i], alpha);
        slots[i] = make_phase_point(params, solve_variational(params, cfg));
      } catch (const std::exception& e) {
        issues[i] = e.what();
      }
    });
  }

  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i])
      result.points.push_back(*slots[i]);
    else
      result.errors.push_back({i, issues[i]});
  }
  for (std::size_t i = 1; i < result.points.size(); ++i) {
    if (result.points[i].q_x < result.points[i - 1].q_x - 1e-6) {
      std::ostringstream oss;
      oss << "q_x decreased from " << result.points[i - 1].q_x << " to " << result.points[i].q_x
          << " between lambda " << result.points[i - 1].lambda << " and "
          << result.points[i].lambda;
      result.warnings.push_back(oss.str());
    }
  }
  return result;
}

SweepResult sweep_phase_diagram(const SweepTemplate& tmpl,
                                const std::vector<double>& alpha_values,
                                const std::vector<double>& lambda_values,
                                const FixedPointConfig& cfg, const SweepOptions& options) {
  if (alpha_values.empty() || lambda_values.empty())
    throw invalid_argument("sweep_phase_diagram: empty grid");
  for (std::size_t i = 1; i < alpha_values.size(); ++i)
    if (!(alpha_values[i] > alpha_values[i - 1]))
      throw invalid_argument("sweep_phase_diagram: alpha grid must be strictly increasing");
  for (std::size_t i = 1; i < lambda_values.size(); ++i)
    if (!(lambda_values[i] > lambda_values[i - 1]))
      throw invalid_argument("sweep_phase_diagram: lambda grid must be strictly increasing");

  const std::size_t total = alpha_values.size() * lambda_values.size();
  SweepResult result;
  std::vector<std::optional<PhasePoint>> slots(total);
  std::vector<std::string> issues(total);

  parallel_for(total, options.threads, [&](std::size_t cell) {
    const std::size_t ia = cell / lambda_values.size();
    const std::size_t il = cell % lambda_values.size();
    try {
      const ModelParams params = tmpl.instantiate(lambda_values[il], alpha_values[ia]);
      slots[cell] = make_phase_point(params, solve_variational(params, cfg));
    } catch (const std::exception& e) {
      issues[cell] = e.what();
    }
  });

  for (std::size_t cell = 0; cell < total; ++cell) {
    if (slots[cell])
      result.points.push_back(*slots[cell]);
    else
      result.errors.push_back({cell, issues[cell]});
  }
  return result;
}

std::optional<LambdaC> detect_lambda_c(const SweepTemplate& tmpl, double alpha,
                                       const std::vector<PhasePoint>& curve,
                                       const FixedPointConfig& cfg, double jump_threshold) {
  if (curve.size() < 2) return std::nullopt;
  ModelParams probe = tmpl.instantiate(curve.front().lambda, alpha);
  const double zero_tol = std::max(1e-6, 1e-4 * probe.rho_x);

  std::size_t first = curve.size();
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const bool jump = curve[i + 1].q_x - curve[i].q_x > jump_threshold;
    const bool departs_zero = curve[i].q_x <= zero_tol && curve[i + 1].q_x > zero_tol;
    if (jump || departs_zero) {
      first = i;
      break;
    }
  }
  if (first == curve.size()) return std::nullopt;

  double lam_lo = curve[first].lambda, lam_hi = curve[first + 1].lambda;
  double q_lo = curve[first].q_x, q_hi = curve[first + 1].q_x;
  while (lam_hi - lam_lo > 1e-3) {
    const double mid = 0.5 * (lam_lo + lam_hi);
    const SolveResult res = solve_variational(tmpl.instantiate(mid, alpha), cfg);
    const double q_mid = res.point.q_x;
    // Assign the midpoint to the branch its overlap resembles.
    if (q_mid > std::max(zero_tol, 0.5 * (q_lo + q_hi))) {
      lam_hi = mid;
      q_hi = q_mid;
    } else {
      lam_lo = mid;
      q_lo = q_mid;
    }
  }
  LambdaC out;
  out.lambda_c = 0.5 * (lam_lo + lam_hi);
  out.is_discontinuous = (q_hi - q_lo) >= jump_threshold;
  return out;
}

std::vector<LimitPoint> limit_curve(const std::vector<double>& lambda_values,
                                    const Prior& prior, const Activation& activation,
                                    const QuadratureRule& rule) {
  if (lambda_values.empty()) throw invalid_argument("limit_curve: empty lambda grid");
  for (std::size_t i = 1; i < lambda_values.size(); ++i)
    if (!(lambda_values[i] > lambda_values[i - 1]))
      throw invalid_argument("limit_curve: lambda grid must be strictly increasing");

  std::vector<LimitPoint> out(lambda_values.size());
  const FixedPointConfig cfg;
  for (std::size_t i = 0; i < lambda_values.size(); ++i) {
    const ModelParams params =
        ModelParams::make(lambda_values[i], 1.0, 3, prior, activation, rule.order);
    const LimitResult lim = solve_limit(params, cfg);
    out[i] = {lambda_values[i], lim.q_x, lim.mmse};
  }
  return out;
}

}  // namespace glmtensor

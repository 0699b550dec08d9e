#include "glmtensor/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glmtensor/errors.hpp"
#include "glmtensor/rng.hpp"

namespace glmtensor {

namespace {

constexpr double kDegeneracyTol = 1e-9;  // psi gap treated as a branch tie

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

OverlapPoint clamp_to_box(const ModelParams& p, const OverlapPoint& pt, double r_cap) {
  return {clamp(pt.q_x, 0.0, p.rho_x), clamp(pt.q_s, 0.0, p.rho_s),
          clamp(pt.r_s, 0.0, r_cap)};
}

OverlapPoint raw_update(const PotentialEvaluator& ev, const OverlapPoint& pt,
                        const FixedPointConfig& cfg) {
  const ModelParams& p = ev.params();
  const double r = channel_snr(p, pt.q_x);
  OverlapPoint upd;
  upd.q_x = ev.output_mi_dr(r, pt.q_s).posterior_sq;  // E[<phi>^2]
  upd.q_s = p.rho_s - ev.scalar_mmse(pt.r_s);
  upd.r_s = std::max(0.0, -2.0 * p.alpha * ev.output_mi_dq(r, pt.q_s, cfg.dq_step));
  if (!std::isfinite(upd.q_x) || !std::isfinite(upd.q_s) || !std::isfinite(upd.r_s)) {
    std::ostringstream oss;
    oss << "non-finite fixed-point update at (" << pt.q_x << ", " << pt.q_s << ", " << pt.r_s
        << ")";
    throw solver_error(oss.str());
  }
  return upd;
}

OverlapPoint damped_step(const PotentialEvaluator& ev, const OverlapPoint& pt,
                         const FixedPointConfig& cfg) {
  const OverlapPoint upd = raw_update(ev, pt, cfg);
  OverlapPoint next{cfg.damping * upd.q_x + (1.0 - cfg.damping) * pt.q_x,
                    cfg.damping * upd.q_s + (1.0 - cfg.damping) * pt.q_s,
                    cfg.damping * upd.r_s + (1.0 - cfg.damping) * pt.r_s};
  return clamp_to_box(ev.params(), next, cfg.r_cap);
}

struct IterationOutcome {
  OverlapPoint point;
  bool converged = false;
  int iterations = 0;
};

IterationOutcome iterate(const PotentialEvaluator& ev, OverlapPoint pt,
                         const FixedPointConfig& cfg) {
  IterationOutcome out;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const OverlapPoint next = damped_step(ev, pt, cfg);
    const double change = std::max({std::abs(next.q_x - pt.q_x), std::abs(next.q_s - pt.q_s),
                                    std::abs(next.r_s - pt.r_s)});
    pt = next;
    if (change < cfg.tol) {
      out.converged = true;
      out.iterations = it + 1;
      break;
    }
  }
  if (!out.converged) out.iterations = cfg.max_iter;
  out.point = pt;
  return out;
}

std::vector<OverlapPoint> build_inits(const ModelParams& p, const FixedPointConfig& cfg) {
  std::vector<OverlapPoint> inits;
  inits.push_back({0.0, 0.0, 0.0});
  const double qs_informative = p.rho_s * (1.0 - 1e-6);
  inits.push_back({p.rho_x, qs_informative,
                   solve_rs(p.prior, qs_informative, p.rule, cfg.r_cap).r_s});
  for (const OverlapPoint& extra : cfg.extra_inits)
    inits.push_back(clamp_to_box(p, extra, cfg.r_cap));
  SplitMix64 rng(cfg.init_seed);
  for (int k = 0; k < cfg.random_inits; ++k)
    inits.push_back({rng.uniform() * p.rho_x, rng.uniform() * p.rho_s, rng.uniform() * 10.0});
  return inits;
}

bool same_point(const OverlapPoint& a, const OverlapPoint& b, const ModelParams& p) {
  const double sx = std::max(p.rho_x, 1.0), ss = std::max(p.rho_s, 1.0);
  return std::abs(a.q_x - b.q_x) < 1e-6 * sx && std::abs(a.q_s - b.q_s) < 1e-6 * ss &&
         std::abs(a.r_s - b.r_s) < 1e-6 * (1.0 + std::abs(a.r_s) + std::abs(b.r_s));
}

struct Candidate {
  OverlapPoint point;
  double psi = 0.0;
  bool converged = false;
  int iterations = 0;
  int branch_id = 0;
};

// Generalized limiting objective; at rank 3 it equals psi_limit.
double limit_objective(const PotentialEvaluator& ev, double q_x) {
  const ModelParams& p = ev.params();
  return ev.output_mi(channel_snr(p, q_x), p.m_s * p.m_s) +
         tensor_term(p.lambda, p.rank, p.rho_x, q_x);
}

}  // namespace

OverlapPoint fixed_point_step(const ModelParams& params, const OverlapPoint& pt,
                              const FixedPointConfig& cfg) {
  check_box(params, pt);
  PotentialEvaluator ev(params);
  return damped_step(ev, pt, cfg);
}

LimitResult solve_limit(const ModelParams& params, const FixedPointConfig& cfg) {
  PotentialEvaluator ev(params);
  const double rho = params.rho_x;

  // Coarse scan; keep every local minimum as a refinement seed.
  const int n_scan = 129;
  std::vector<double> val(n_scan);
  for (int i = 0; i < n_scan; ++i)
    val[i] = limit_objective(ev, rho * i / (n_scan - 1.0));
  std::vector<int> seeds;
  for (int i = 0; i < n_scan; ++i) {
    const bool left_ok = i == 0 || val[i] <= val[i - 1];
    const bool right_ok = i == n_scan - 1 || val[i] <= val[i + 1];
    if (left_ok && right_ok) seeds.push_back(i);
  }

  std::vector<std::pair<double, double>> candidates;  // (psi, q_x)
  const double golden = 0.5 * (3.0 - std::sqrt(5.0));
  for (int idx : seeds) {
    double lo = rho * std::max(idx - 1, 0) / (n_scan - 1.0);
    double hi = rho * std::min(idx + 1, n_scan - 1) / (n_scan - 1.0);
    // Golden-section to ~1e-10 in q
    double x1 = lo + golden * (hi - lo), x2 = hi - golden * (hi - lo);
    double f1 = limit_objective(ev, x1), f2 = limit_objective(ev, x2);
    while (hi - lo > 1e-10 * std::max(rho, 1.0)) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = lo + golden * (hi - lo);
        f1 = limit_objective(ev, x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = hi - golden * (hi - lo);
        f2 = limit_objective(ev, x2);
      }
    }
    double q = 0.5 * (lo + hi);
    candidates.emplace_back(limit_objective(ev, q), q);
    // Polish with the damped one-dimensional overlap fixed point.
    for (int it = 0; it < cfg.max_iter; ++it) {
      const double upd = clamp(
          ev.output_mi_dr(channel_snr(params, q), params.m_s * params.m_s).posterior_sq, 0.0,
          rho);
      const double next = cfg.damping * upd + (1.0 - cfg.damping) * q;
      const double change = std::abs(next - q);
      q = next;
      if (change < cfg.tol) break;
    }
    candidates.emplace_back(limit_objective(ev, q), q);
  }
  candidates.emplace_back(limit_objective(ev, 0.0), 0.0);

  std::sort(candidates.begin(), candidates.end());
  LimitResult best{candidates.front().second, candidates.front().first, 0.0, false};
  for (const auto& [f, q] : candidates) {
    if (f - candidates.front().first < kDegeneracyTol) {
      if (std::abs(q - best.q_x) > 1e-6 * std::max(rho, 1.0)) best.near_degenerate = true;
      if (q > best.q_x) {
        best.q_x = q;
        best.psi_value = f;
      }
    }
  }
  best.mmse = std::pow(params.rho_x, params.rank) - std::pow(best.q_x, params.rank);
  return best;
}

SolveResult solve_variational(const ModelParams& params, const FixedPointConfig& cfg) {
  if (params.alpha <= kAlphaLimitThreshold) {
    const LimitResult lim = solve_limit(params, cfg);
    SolveResult res;
    res.point = {lim.q_x, params.m_s * params.m_s, 0.0};
    res.psi_value = psi(params, res.point);
    res.converged = true;
    res.iterations = 0;
    res.branch_id = 0;
    res.near_degenerate = lim.near_degenerate;
    return res;
  }

  PotentialEvaluator ev(params);
  std::vector<Candidate> candidates;
  std::vector<std::string> diagnostics;
  int next_branch = 0;

  auto add_candidate = [&](const OverlapPoint& pt, bool converged, int iterations) {
    for (const Candidate& c : candidates)
      if (same_point(c.point, pt, params)) return;
    Candidate c;
    c.point = pt;
    c.psi = ev.psi(pt);
    c.converged = converged;
    c.iterations = iterations;
    c.branch_id = next_branch++;
    candidates.push_back(c);
  };

  const std::vector<OverlapPoint> inits = build_inits(params, cfg);
  for (std::size_t i = 0; i < inits.size(); ++i) {
    try {
      const IterationOutcome out = iterate(ev, inits[i], cfg);
      if (out.converged) add_candidate(out.point, true, out.iterations);
    } catch (const std::exception& e) {
      std::ostringstream oss;
      oss << "start " << i << " at (" << inits[i].q_x << ", " << inits[i].q_s << ", "
          << inits[i].r_s << "): " << e.what();
      diagnostics.push_back(oss.str());
    }
  }

  const bool no_start_converged = candidates.empty();
  if (no_start_converged || cfg.force_grid) {
    try {
      OverlapPoint best_cell;
      double best_psi = HUGE_VAL;
      for (int ix = 0; ix < cfg.grid_nx; ++ix) {
        const double q_x = params.rho_x * ix / std::max(cfg.grid_nx - 1, 1);
        for (int is = 0; is < cfg.grid_ns; ++is) {
          const double q_s = params.rho_s * is / std::max(cfg.grid_ns - 1, 1);
          const OverlapPoint pt{q_x, q_s,
                                solve_rs(params.prior, q_s, params.rule, cfg.r_cap).r_s};
          const double value = ev.psi(pt);
          if (value < best_psi) {
            best_psi = value;
            best_cell = pt;
          }
        }
      }
      const IterationOutcome refined = iterate(ev, best_cell, cfg);
      if (refined.converged)
        add_candidate(refined.point, true, refined.iterations);
      else
        add_candidate(best_cell, false, cfg.max_iter);
    } catch (const std::exception& e) {
      diagnostics.push_back(std::string("grid fallback: ") + e.what());
    }
  }

  if (candidates.empty()) {
    std::ostringstream oss;
    oss << "all starts diverged";
    for (const std::string& d : diagnostics) oss << "\n  " << d;
    throw solver_error(oss.str());
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].psi < candidates[best].psi) best = i;

  SolveResult res;
  bool near_degenerate = false;
  std::size_t chosen = best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i == best) continue;
    if (candidates[i].psi - candidates[best].psi < kDegeneracyTol &&
        !same_point(candidates[i].point, candidates[best].point, params)) {
      near_degenerate = true;
      if (candidates[i].point.q_x > candidates[chosen].point.q_x) chosen = i;
    }
  }
  const Candidate& c = candidates[chosen];
  res.point = c.point;
  res.psi_value = psi(params, c.point);  // fresh evaluation
  res.converged = c.converged;
  res.iterations = c.iterations;
  res.branch_id = c.branch_id;
  res.near_degenerate = near_degenerate;
  return res;
}

double mutual_information(const ModelParams& params, const FixedPointConfig& cfg) {
  return solve_variational(params, cfg).psi_value;
}

double tensor_mmse(const ModelParams& params, const FixedPointConfig& cfg,
                   bool* near_degenerate) {
  const SolveResult res = solve_variational(params, cfg);
  if (near_degenerate) *near_degenerate = res.near_degenerate;
  return std::pow(params.rho_x, params.rank) - std::pow(res.point.q_x, params.rank);
}

std::array<std::array<double, 3>, 3> fixed_point_jacobian(const ModelParams& params,
                                                          const OverlapPoint& pt,
                                                          const FixedPointConfig& cfg,
                                                          double h) {
  PotentialEvaluator ev(params);
  const auto eval = [&](const OverlapPoint& q) {
    return raw_update(ev, clamp_to_box(params, q, cfg.r_cap), cfg);
  };
  std::array<std::array<double, 3>, 3> jac{};
  for (int j = 0; j < 3; ++j) {
    OverlapPoint hi = pt, lo = pt;
    double* hi_c = j == 0 ? &hi.q_x : (j == 1 ? &hi.q_s : &hi.r_s);
    double* lo_c = j == 0 ? &lo.q_x : (j == 1 ? &lo.q_s : &lo.r_s);
    const double upper = j == 0 ? params.rho_x : (j == 1 ? params.rho_s : HUGE_VAL);
    *hi_c = std::min(*hi_c + h, upper);
    *lo_c = std::max(*lo_c - h, 0.0);
    const double width = *hi_c - *lo_c;
    const OverlapPoint f_hi = eval(hi), f_lo = eval(lo);
    jac[0][j] = (f_hi.q_x - f_lo.q_x) / width;
    jac[1][j] = (f_hi.q_s - f_lo.q_s) / width;
    jac[2][j] = (f_hi.r_s - f_lo.r_s) / width;
  }
  return jac;
}

}  // namespace glmtensor

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "glmtensor/quadrature.hpp"

namespace glmtensor {

enum class ActivationKind { Linear, Sign, SignDeadzone, Custom };

/// Componentwise GLM nonlinearity phi. Sign and SignDeadzone are odd with
/// sign(0) = 0; Linear is the identity (unbounded); Custom wraps a user
/// function together with its sup-norm bound (nullopt = unbounded).
struct Activation {
  ActivationKind kind = ActivationKind::Linear;
  double epsilon = 0.0;  // SignDeadzone dead zone half-width
  std::function<double(double)> fn;
  std::optional<double> sup_norm;

  static Activation linear();
  static Activation sign();
  static Activation sign_deadzone(double epsilon);
  static Activation custom(std::function<double(double)> fn, std::optional<double> sup_norm);

  double operator()(double x) const;
  /// True when phi takes finitely many values (level-collapse applies).
  bool piecewise_constant() const {
    return kind == ActivationKind::Sign || kind == ActivationKind::SignDeadzone;
  }
  bool bounded() const { return kind != ActivationKind::Linear && (kind != ActivationKind::Custom || sup_norm.has_value()); }
};

/// Which evaluation route output_mi and its derivatives take. Auto picks the
/// closed form for Linear, the level-collapse sum for Sign/SignDeadzone and
/// the generic inner quadrature otherwise.
enum class MiPath { Auto, Levels, Generic };

/// Output second moment rho_x = E[phi(T)^2], T ~ N(0, rho_s). Closed forms:
/// Linear -> rho_s, Sign -> 1, SignDeadzone -> 2 Phi(-eps / sqrt(rho_s)).
double rho_x(const Activation& act, double rho_s, const QuadratureRule& rule);

/// Conditional mutual information
///   I_phi(r, q; rho_s) = I(U; sqrt(r) phi(sqrt(rho_s - q) U + sqrt(q) V) + Z | V)
/// in nats, for independent standard normals U, V, Z.
double output_mi(const Activation& act, double r, double q, double rho_s,
                 const QuadratureRule& rule, MiPath path = MiPath::Auto);

/// dI_phi/dr together with the two expectations it is built from, evaluated
/// under one quadrature so that phi_sq - 2*derivative == posterior_sq holds
/// exactly. posterior_sq = E[<phi>_r^2] is the overlap update of the solver.
struct OutputMiDr {
  double derivative = 0.0;    // dI_phi/dr = (phi_sq - posterior_sq) / 2
  double phi_sq = 0.0;        // E[phi(sqrt(rho_s - q) U + sqrt(q) V)^2]
  double posterior_sq = 0.0;  // E[<phi>_r^2]
};
OutputMiDr output_mi_dr_detail(const Activation& act, double r, double q, double rho_s,
                               const QuadratureRule& rule, MiPath path = MiPath::Auto);
double output_mi_dr(const Activation& act, double r, double q, double rho_s,
                    const QuadratureRule& rule, MiPath path = MiPath::Auto);

inline double default_dq_step(double rho_s) { return 1e-4 * std::max(rho_s, 1.0); }

/// Central finite-difference estimate of dI_phi/dq (one-sided at the box
/// boundary). Expected <= 0; estimates above +1e-6 set *warned when given.
double output_mi_dq(const Activation& act, double r, double q, double rho_s,
                    const QuadratureRule& rule, double step = 0.0, bool* warned = nullptr);

namespace detail {

/// Inverse standard normal CDF (Newton on erfc with a tail-safe seed).
double normal_quantile(double t);

/// One Gaussian axis for the u / U integrals at fixed V: nodes, weights and
/// phi evaluated at sqrt(rho_s - q) * node + shift. When phi has jump
/// discontinuities on the axis the rule is rebuilt per smooth segment in CDF
/// space, so piecewise-constant activations integrate exactly.
struct GaussianAxis {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> phi;
};
GaussianAxis build_axis(const Activation& act, double scale, double shift,
                        const QuadratureRule& rule);

}  // namespace detail

}  // namespace glmtensor

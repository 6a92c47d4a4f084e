#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qunravel/core.hpp"
#include "qunravel/lindblad.hpp"
#include "qunravel/potential.hpp"

namespace qunravel::models {

/// Kicked rotor H = L^2/(2 I) + K cos θ sum_n δ(t - n τ). Angular momentum
/// L = hbar m with m in [-(dim-1)/2, (dim-1)/2]; the kick acts first within
/// each period, then the free rotation.
struct KickedRotorParams {
  double kick = 10.0;  // K
  double inertia = 1.0;
  double hbar = 1.0;
  int dim = 201;
  double period = 1.0;  // τ

  double k_eff() const { return kick * period / inertia; }
  int m_max() const { return (dim - 1) / 2; }
  int index_of(int m) const { return m + m_max(); }
  /// Action scale J/hbar realized by the truncation.
  double action_ratio() const { return m_max(); }
  void validate() const;  // dim odd and >= 65, positive scales
};

/// One-period Floquet operator in the angular-momentum basis.
Operator rotor_floquet(const KickedRotorParams& params);

/// Population within `margin` states of either truncation edge.
double rotor_edge_population(const Ket& psi, int margin = 3);

struct PhasePoint {
  double q = 0.0;  // θ in [0, 2π) for the rotor
  double p = 0.0;
};

/// p <- p + K sin θ, then θ <- θ + p τ / I (mod 2π).
struct StandardMap {
  double kick = 10.0;
  double inertia = 1.0;
  double period = 1.0;

  void forward(PhasePoint& x) const;
  void inverse(PhasePoint& x) const;
  /// Advances the point and applies the Jacobian of the step to `tangent`.
  void tangent(PhasePoint& x, Eigen::Vector2d& tangent) const;
};

/// The dimensionless map with τ/I = 1 and kick `k_eff`.
std::vector<PhasePoint> classical_standard_map(std::vector<PhasePoint> points, double k_eff, int n_steps);

double wrap_angle(double theta);  // into [0, 2π)

struct LyapunovResult {
  double lambda = 0.0;     // per step (or per unit time for flows)
  double std_error = 0.0;  // over samples
  int samples = 0;
};

/// Advances a phase point by one step and applies the step's Jacobian to
/// the tangent vector.
using TangentStep = std::function<void(PhasePoint&, Eigen::Vector2d&)>;

/// Mean log-stretch rate of the tangent vector, renormalized every
/// `renorm_every` steps, over the given starting points. `step_size` converts
/// per-step rates to per-time rates.
LyapunovResult lyapunov_estimate(const TangentStep& step, const std::vector<PhasePoint>& starts, int n_steps,
                                 int renorm_every = 10, double step_size = 1.0);

/// Standard-map convenience: `n_samples` starting points drawn uniformly on
/// [0, 2π)^2 from `seed`.
LyapunovResult lyapunov_estimate(const StandardMap& map, int n_steps, int n_samples, std::uint64_t seed);

/// Exact harmonic flow over time `dt` (rotation in scaled phase space).
TangentStep harmonic_flow(double omega, double mass, double dt);

/// T = ln(action / hbar) / λ. Throws ValidationError for λ <= 0 or action <= hbar.
double ehrenfest_time(double lambda, double action, double hbar);

struct LocalizationScales {
  double ell = 0.0;     // hbar sqrt(λ / (γ m kT))
  double tau = 0.0;     // localization time at ell
  double r_est = 0.0;   // jump-rate estimate at ell
};

double localization_time(const QBMParams& params, double ell);  // hbar^2 / (γ m kT ell^2)
double jump_rate_estimate(const QBMParams& params, double ell);  // γ m kT ell^2 / hbar^2
LocalizationScales localization_scales(const QBMParams& params, double lambda);

}  // namespace qunravel::models

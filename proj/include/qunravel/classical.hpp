#pragma once

#include <cstdint>
#include <vector>

#include "qunravel/core.hpp"
#include "qunravel/models.hpp"
#include "qunravel/potential.hpp"
#include "qunravel/rng.hpp"

namespace qunravel::classical {

using models::PhasePoint;

enum class Integrator { euler_maruyama, leapfrog };

/// dx = p/m dt (+ optional position noise), dp = (-V'(x) - 2γp) dt + sqrt(4γ m kT) dW.
struct LangevinParams {
  double m = 1.0;
  double gamma = 1.0;
  double kT = 1.0;
  PotentialSpec potential;
  double dt = 1e-3;
  Integrator integrator = Integrator::euler_maruyama;
  /// Diffusion constant of an optional position noise sqrt(x_noise) dW'; 0 disables it.
  double x_noise = 0.0;

  double noise_amplitude() const;  // sqrt(4 γ m kT)
  void validate() const;
};

/// Points with one random stream each (stream(seed, index)), so the
/// evolution does not depend on how points are partitioned across workers.
struct ClassicalEnsemble {
  std::vector<PhasePoint> points;
  std::vector<SplitMix64> rngs;

  std::size_t size() const { return points.size(); }

  /// Independent Gaussian samples with the given means and standard deviations.
  static ClassicalEnsemble gaussian(std::size_t n, PhasePoint mean, double sd_x, double sd_p, std::uint64_t seed);
};

/// One step for every point. Returns true when dt γ > 0.05 (step warning).
bool langevin_step(ClassicalEnsemble& ensemble, const LangevinParams& params);

/// `n_steps` steps split over `threads` workers.
bool langevin_evolve(ClassicalEnsemble& ensemble, const LangevinParams& params, long n_steps, int threads = 1);

struct EnsembleMoments {
  std::size_t n = 0;
  double mean_x = 0.0, mean_p = 0.0;
  double var_x = 0.0, var_p = 0.0, cov_xp = 0.0;
  double mean_p2 = 0.0;
  double se_mean_p = 0.0;   // standard errors
  double se_var_p = 0.0;
  double se_mean_p2 = 0.0;
};

/// Compensated sums in point order.
EnsembleMoments ensemble_moments(const ClassicalEnsemble& ensemble);

struct MomentRateCheck {
  double t = 0.0;  // midpoint
  double dp_dt = 0.0, dp_dt_pred = 0.0, dp_dt_se = 0.0;
  double dvar_dt = 0.0, dvar_dt_pred = 0.0, dvar_dt_se = 0.0;
};

struct FokkerPlanckReport {
  std::vector<MomentRateCheck> intervals;
  double max_z = 0.0;
  bool passes = false;  // every |z| <= 3
};

/// Moment changes between consecutive snapshots (point pairs, so correlated
/// noise cancels in the standard errors) against the exact solution of
/// d<p>/dt = -k<x> - 2γ<p> and dVar(p)/dt = -2k Cov(x,p) - 4γ Var(p) + 4γ m kT
/// started from the earlier snapshot. Rates are changes divided by the gap.
/// Throws ValidationError unless the potential is free or harmonic.
FokkerPlanckReport fokker_planck_moment_check(const std::vector<ClassicalEnsemble>& snapshots,
                                              const std::vector<double>& times, const LangevinParams& params);

struct EquipartitionReport {
  double kinetic_ratio = 0.0;    // <p^2>/(m kT)
  double potential_ratio = 0.0;  // k Var(x)/kT (harmonic only, else 0)
};

EquipartitionReport equipartition_check(const ClassicalEnsemble& ensemble, const LangevinParams& params);

/// Least-squares fit of V(t) = V0 e^{-4γt} + D (1 - e^{-4γt})/(4γ), the
/// solution of dV/dt = D - 4γV.
struct DiffusionFit {
  double diffusion = 0.0;
  double v0 = 0.0;
  double std_error = 0.0;
};

DiffusionFit diffusion_fit(const std::vector<double>& times, const std::vector<double>& variance, double gamma);

/// Momentum statistics of one side of the bridge at common output times.
struct MomentSeries {
  std::vector<double> times;
  std::vector<double> mean_p;
  std::vector<double> var_p;  // variance across samples (of <p> for the quantum side)
  std::size_t samples = 0;
};

struct BridgeReport {
  std::vector<double> times;
  std::vector<double> var_diff;  // quantum - classical
  std::vector<double> z;         // difference over combined standard error
  DiffusionFit quantum, classical;
  double slope_rel_diff = 0.0;
  double tolerance = 0.0;
  bool passes = false;
};

/// Throws ValidationError when the output times differ.
BridgeReport moment_bridge(const MomentSeries& quantum, const MomentSeries& classical, double gamma,
                           double tolerance);

}  // namespace qunravel::classical

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qunravel/core.hpp"
#include "qunravel/grid.hpp"
#include "qunravel/potential.hpp"

namespace qunravel {

/// dρ/dt = -i/hbar [H, ρ] + sum_i D[A_i]ρ - sum_j D[B_j]ρ with
/// D[A]ρ = AρA^dag - {A^dag A, ρ}/2. The B_j ("subtracted") terms are only
/// used for truncated master equations that are not of Lindblad form.
struct LindbladModel {
  Operator H;
  std::vector<Operator> lindblads;
  double hbar = 1.0;
  std::vector<Operator> subtracted;

  int dim() const { return static_cast<int>(H.rows()); }
  bool is_lindblad_form() const { return subtracted.empty(); }
  /// Throws ValidationError on dimension mismatch, non-Hermitian H or hbar <= 0.
  void validate() const;
};

DensityMatrix liouvillian_apply(const LindbladModel& model, const DensityMatrix& rho);

/// ||H||/hbar + sum ||A_i||^2 (spectral norms): the stiffness scale that
/// bounds the integrator step.
double spectral_scale(const LindbladModel& model);

struct MasterRun {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  double max_trace_drift = 0.0;
  double min_eigenvalue = 0.0;       // over the recorded states
  int positivity_violations = 0;     // recorded states with an eigenvalue below -1e-6
  bool step_warning = false;         // dt * spectral_scale > 0.1
};

struct MasterOptions {
  int record_every = 1;
  bool check_positivity = true;
};

/// Classical RK4 from rho0; records states every `record_every` steps
/// (the initial and final states are always recorded).
MasterRun integrate_master(const LindbladModel& model, const DensityMatrix& rho0, double dt, int n_steps,
                           const MasterOptions& options = {});

/// A_i -> A_i + λ_i with H -> H - (i hbar/2) sum(λ_i^* A_i - λ_i A_i^dag),
/// which leaves the Liouvillian unchanged.
LindbladModel shift_lindblad(const LindbladModel& model, const std::vector<cplx>& lambda);

/// A_i -> sum_j U_ij A_j. Throws ValidationError unless U is unitary within 1e-10.
LindbladModel rotate_lindblad(const LindbladModel& model, const Operator& u);

struct QBMParams {
  double m = 1.0;
  double kT = 1.0;  // kB * T
  double gamma = 1.0;
  double hbar = 1.0;
  PotentialSpec potential;
};

struct GridSpec {
  int n = 256;
  double length = 40.0;
};

struct QBMModel {
  LindbladModel model;
  Operator x;
  Operator p;
  PositionGrid grid;
  QBMParams params;
  double alpha = 0.0;  // coefficient of x in A
  double beta = 0.0;   // coefficient of i p in A
  bool caldeira_leggett = false;
};

/// Quantum Brownian motion on a periodic position grid with the single
/// Lindblad operator A = alpha x + i beta p, alpha = sqrt(4 gamma m kT)/hbar,
/// beta = sqrt(gamma/(4 m kT)), and H = p^2/2m + V + gamma/2 (xp + px).
/// With `caldeira_leggett` the beta^2 D[p] part is removed.
/// Throws ValidationError for n < 16, nonpositive parameters, or a grid that
/// does not resolve the thermal length and momentum.
QBMModel build_qbm(const QBMParams& params, const GridSpec& grid, bool caldeira_leggett = false);

/// Width sigma of the A eigenstates (coherent_state convention, var_x = sigma^2/2).
double qbm_coherent_width(const QBMParams& params);

struct MomentCheck {
  std::vector<double> times;  // interior points of the series
  std::vector<double> dx_dt_fd, dx_dt_pred;
  std::vector<double> dp_dt_fd, dp_dt_pred;
  double max_rel_err_x = 0.0;
  double max_rel_err_p = 0.0;
};

/// Five-point central differences of <x>, <p> along a uniformly sampled
/// series against <p>/m and -Tr(ρ V'(x)) - 2 gamma <p>. Errors are relative
/// to the largest predicted magnitude in the series (1 if it vanishes).
MomentCheck unconditioned_moments(const MasterRun& run, const QBMModel& qbm);

}  // namespace qunravel

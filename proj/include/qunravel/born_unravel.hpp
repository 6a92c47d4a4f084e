#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qunravel/core.hpp"
#include "qunravel/lindblad.hpp"
#include "qunravel/rng.hpp"

namespace qunravel::born {

/// Branch creation structure at a state ψ. With v_i = (A_i - <A_i>)ψ and the
/// Gram matrix G = W diag(r) W^dag (r descending), the operators are
/// J_k = sum_i U_ki (A_i - <A_i>) with U = W^T, so that <J_k ψ|J_l ψ> = r_k δ_kl.
/// Only branches above the zero-rate threshold are kept in `images`.
struct BranchSet {
  std::vector<Ket> images;       // J_k ψ, k < kept()
  std::vector<double> rates;     // r_k of the kept branches, descending
  Operator u;                    // N x N, row k defines J_k (all N rows)
  RealVector gram_eigenvalues;   // all N, descending, clamped at 0
  std::vector<cplx> mean_a;      // <A_i>_ψ
  double total_rate = 0.0;       // trace of the Gram matrix
  bool generic = true;           // false when two kept rates coincide within 1e-8 relative

  int kept() const { return static_cast<int>(images.size()); }
};

/// Throws ValidationError for models with subtracted terms (not an unravelling target).
BranchSet branch_set(const LindbladModel& model, const Ket& psi);

/// Relative and absolute zero-rate thresholds.
inline constexpr double kRelativeRateCutoff = 1e-12;
inline constexpr double kAbsoluteRateCutoff = 1e-14;

struct EffectiveHamiltonian {
  Operator hermitian_part;
  Operator anti_hermitian_part;
  Operator full() const { return hermitian_part + anti_hermitian_part; }
};

/// H + (i hbar/2) sum_k (<B_k>^* J_k - <B_k> J_k^dag - J_k^dag J_k), B = U A,
/// summed over all N rotated operators (the sum does not depend on U).
EffectiveHamiltonian effective_hamiltonian(const LindbladModel& model, const Ket& psi, const BranchSet& bs);

/// H_eff φ with the means <A_i> taken from `mean_a`, without forming H_eff.
Ket apply_effective_hamiltonian(const LindbladModel& model, const std::vector<cplx>& mean_a, const Ket& phi);

std::vector<cplx> lindblad_means(const LindbladModel& model, const Ket& psi);

/// One Heun step of dψ/dt = H_eff[ψ]ψ/(i hbar) + (sum r/2) ψ followed by
/// renormalization. H_eff is re-evaluated at the predictor state.
Ket deterministic_step(const LindbladModel& model, const Ket& psi, double dt);

struct JumpEvent {
  double t = 0.0;
  int branch = -1;
};

struct StepResult {
  Ket psi;
  std::optional<int> branch;  // index into the branch set at the start state
  bool step_warning = false;  // dt * sum r > 0.1
};

/// Piecewise-deterministic step: with probability r_k dt jump to
/// J_k ψ / sqrt(r_k) (one uniform draw, at most one jump), otherwise
/// take a deterministic step.
StepResult pdp_step(const LindbladModel& model, const Ket& psi, double dt, SplitMix64& rng);

/// Diffusive step with the same H_eff: Heun drift plus sum_k J_k ψ dW_k
/// (real Wiener increments, Euler-Maruyama at the start state), then
/// renormalization.
StepResult qsd_step(const LindbladModel& model, const Ket& psi, double dt, SplitMix64& rng);

struct ConditionedIncrement {
  double drift = 0.0;                 // Tr(O L(|ψ><ψ|)) = E d<O>/dt
  std::vector<double> jump_terms;     // <J_k^dag (O - <O>) J_k>/r_k per kept branch
  std::vector<double> rates;
  /// d<O>/dt between jumps: drift - sum r_k jump_k.
  double deterministic_rate() const;
  /// E d<O> = deterministic_rate dt + sum r_k dt jump_k.
  double mean_increment(double dt) const;
};

ConditionedIncrement conditioned_increment(const LindbladModel& model, const Ket& psi, const Operator& o,
                                           const BranchSet& bs);

struct JumpDisplacement {
  double rate = 0.0;
  double gamma_x = 0.0;  // <J^dag (x - <x>) J>/<J^dag J>
  double gamma_p = 0.0;
};

/// Per kept branch. Throws ValidationError when no branch has a positive rate.
std::vector<JumpDisplacement> jump_displacement_stats(const Ket& psi, const BranchSet& bs, const Operator& x,
                                                      const Operator& p);

enum class Scheme { born, qsd };

struct Observables {
  Operator x;
  Operator p;
};

/// One row of the trajectory table; `jumped` and `branch_index` refer to the
/// interval since the previous row (the last jump if several).
struct TrajectoryRow {
  long step = 0;
  double t = 0.0;
  bool jumped = false;
  int branch_index = -1;
  long n_jumps_cum = 0;
  double ex = 0.0, ep = 0.0, var_x = 0.0, var_p = 0.0;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::vector<TrajectoryRow> rows;
  std::vector<JumpEvent> jumps;
  double max_norm_error = 0.0;
  double jump_sq_dx = 0.0;  // sum over jumps of (Δ<x>)^2
  double jump_sq_dp = 0.0;  // sum over jumps of (Δ<p>)^2
  bool step_warning = false;
  Ket final_state;
};

struct TrajectoryOptions {
  double dt = 1e-3;
  long n_steps = 1000;
  long record_every = 10;
  /// Sub-steps keep (sum r) * dt_sub at or below this value.
  double max_rate_dt = 0.02;
  bool allow_jumps = true;  // false: deterministic H_eff flow only (Born scheme)
};

using RecordCallback = std::function<void(std::size_t row, const Ket& psi)>;

/// Runs one trajectory; rows are written at step 0 and every
/// `record_every` steps. `on_record` (optional) sees the state at every row.
TrajectoryRecord run_trajectory(const LindbladModel& model, const Ket& psi0, Scheme scheme,
                                const TrajectoryOptions& options, SplitMix64& rng,
                                const Observables* obs = nullptr, const RecordCallback& on_record = {});

struct EnsembleOptions {
  Scheme scheme = Scheme::born;
  long n_traj = 100;
  TrajectoryOptions trajectory;
  std::uint64_t seed = 0;
  int threads = 1;
  bool accumulate_rho = true;
  int keep_records = 1;  // full TrajectoryRecords retained for the first trajectories
};

struct EnsembleSample {
  double t = 0.0;
  // averages over trajectories of the conditioned moments
  double mean_ex = 0.0, mean_ep = 0.0, mean_var_x = 0.0, mean_var_p = 0.0;
  // spread of the conditioned means across trajectories
  double var_ex = 0.0, var_ep = 0.0;
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<DensityMatrix> rho;  // empty unless accumulate_rho
  std::vector<EnsembleSample> moments;  // empty without observables
  std::vector<TrajectoryRecord> records;
  long total_jumps = 0;
  double max_norm_error = 0.0;
  double mean_jump_sq_dx_rate = 0.0;  // E[sum (Δ<x>)^2] / t_final
  double mean_jump_sq_dp_rate = 0.0;
  bool step_warning = false;
};

/// Trajectory i uses stream(seed, i). Trajectories are grouped in fixed
/// blocks that are reduced in index order with compensated sums, so the
/// result does not depend on `threads`.
EnsembleResult ensemble_run(const LindbladModel& model, const Ket& psi0, const EnsembleOptions& options,
                            const Observables* obs = nullptr);

inline constexpr long kEnsembleBlock = 16;

}  // namespace qunravel::born

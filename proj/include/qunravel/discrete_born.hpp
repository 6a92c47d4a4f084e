#pragma once

#include <cstdint>
#include <vector>

#include "qunravel/hilbert.hpp"

namespace qunravel::discrete {

/// One tick of the ticker tape: the system M meets a fresh environment
/// factor E_n prepared in `env_init` and they evolve under `unitary`
/// (acting on M (x) E_n, M the slow index).
struct InteractionStep {
  Operator unitary;
  int env_dim = 2;
  Ket env_init;
};

/// Throws ValidationError unless the step is dimensionally consistent and
/// U^dag U = 1 within 1e-10.
void validate_step(const InteractionStep& step);

struct KrausSet {
  std::vector<Operator> ops;
  /// Branch probabilities <M0|K_a^dag K_a|M0> for the reference state the
  /// set was fixed against; empty for an unfixed set.
  std::vector<double> probs;
  /// False when two nonzero probabilities coincide within 1e-8, in which
  /// case the basis inside the degenerate block is conventional.
  bool generic = true;
};

Operator kraus_completeness(const KrausSet& set);  // sum K^dag K
DensityMatrix apply_channel(const KrausSet& set, const DensityMatrix& rho);

/// K_a = <E_a| U |E_0>. Throws ValidationError when `env_basis` is not an
/// orthonormal basis of the environment factor.
KrausSet kraus_from_interaction(const InteractionStep& step, const std::vector<Ket>& env_basis);
/// Same with the computational basis of the environment factor.
KrausSet kraus_from_interaction(const InteractionStep& step);

/// Rotates the Kraus operators so that Tr(K_a rho0 K_b^dag) = p_a delta_ab
/// for the pure reference state rho0. Branches come out with probabilities
/// descending; each branch image K_a|M0> has its largest component real
/// positive.
KrausSet orthogonality_fix(const KrausSet& set, const DensityMatrix& rho0);
KrausSet orthogonality_fix(const KrausSet& set, const Ket& m0);

/// Instantaneous Schmidt-basis jump structure of a bipartite state.
struct RateMatrix {
  RealVector probs;   // Schmidt weights p_a, descending
  Operator omega;     // omega_ab = <M_a E_a|H_I|M_b E_b> / (i hbar)
  RealMatrix flow;    // omega_ab - omega_ba (real, antisymmetric)
  RealMatrix rates;   // rates(a, b) = r_{b -> a} = [flow_ab]^+ / p_b
  bool generic = true;

  /// dp_a/dt = sum_b flow_ab
  RealVector dp_dt() const { return flow.rowwise().sum(); }
};

RateMatrix schmidt_rate_matrix(const Ket& psi, const Operator& h_int, const hilbert::CompositeSpace& space,
                               double hbar = 1.0);

/// A node of the branch tree. `state` is unnormalized with
/// <state|state> = prob.
struct BranchNode {
  int id = 0;
  int parent = -1;
  int depth = 0;
  std::vector<int> label;  // a_1 ... a_depth (oldest first)
  Ket state;
  double prob = 1.0;
  std::vector<int> children;
};

struct BranchTree {
  std::vector<BranchNode> nodes;  // nodes[0] is the root

  std::vector<int> leaves() const;
  /// sum over nodes at `depth` of |state><state|.
  DensityMatrix unconditioned(int depth) const;
  int depth() const;
};

struct TickerTapeResult {
  BranchTree tree;
  std::vector<int> trajectory;  // node ids root -> leaf of one sampled history
};

/// Children of a branch for the next interaction step, using the Kraus set
/// fixed against that branch's own state. Children with probability below
/// `prune` are dropped.
std::vector<BranchNode> branch_children(const BranchNode& parent, const InteractionStep& step,
                                        double prune = 1e-14);

/// Full branch tree plus one history sampled from `seed`.
TickerTapeResult run_ticker_tape(const Ket& m0, const std::vector<InteractionStep>& steps, std::uint64_t seed);

struct SampledHistory {
  std::vector<int> outcomes;  // a_1 ... a_n
  std::vector<double> probs;  // cumulative branch probability after each step
  Ket state;                  // normalized conditioned state at the end
};

/// Samples one history without building the tree.
SampledHistory sample_history(const Ket& m0, const std::vector<InteractionStep>& steps, SplitMix64& rng);

struct SectorReport {
  double max_cross_coupling = 0.0;      // max sqrt(Tr A^dag A)/hbar over cross-sector blocks
  double max_inter_sector_flow = 0.0;   // max |omega - omega^T| between components in different sectors
  double threshold = 0.0;
  bool passes = false;
  std::vector<double> sector_probs;
  std::vector<hilbert::SchmidtDecomposition> branches;  // per-sector Schmidt decompositions
};

/// Branch-Schmidt super-selection check for a state on M (x) E with the
/// environment basis split into `sectors` (lists of environment basis
/// indices). Passes iff the largest cross-sector coupling is below
/// `threshold` (the sector_coupling_threshold config value).
SectorReport branch_schmidt_check(const Ket& psi, const Operator& h_int, const hilbert::CompositeSpace& space,
                                  const std::vector<std::vector<int>>& sectors, double threshold,
                                  double hbar = 1.0);

/// Eigenvalue flow of the reduced state of M under exact evolution, with
/// an optional conditioned walker that jumps between Schmidt components
/// with the instantaneous rates (Euler sub-steps).
struct FlowSample {
  double t = 0.0;
  RealVector probs;
  int occupied = 0;
};

struct FlowOptions {
  double t_final = 1.0;
  int n_sub = 1000;
  double hbar = 1.0;
};

std::vector<FlowSample> eigenvalue_flow(const Ket& psi0, const Operator& h_total, const Operator& h_int,
                                        const hilbert::CompositeSpace& space, const FlowOptions& options,
                                        SplitMix64* rng = nullptr);

/// Exact evolution exp(-i H t / hbar) psi for Hermitian H.
Ket evolve_exact(const Operator& h, const Ket& psi, double t, double hbar = 1.0);

}  // namespace qunravel::discrete

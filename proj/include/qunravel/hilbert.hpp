#pragma once

#include <cstddef>
#include <vector>

#include "qunravel/core.hpp"
#include "qunravel/rng.hpp"

namespace qunravel::hilbert {

/// Tensor-product structure of a flat Hilbert space. Factor 0 is the
/// slowest-varying index of the flat (Kronecker) ordering.
class CompositeSpace {
 public:
  explicit CompositeSpace(std::vector<int> factor_dims);

  int factors() const { return static_cast<int>(dims_.size()); }
  int dim(int factor) const { return dims_.at(static_cast<std::size_t>(factor)); }
  const std::vector<int>& dims() const { return dims_; }
  int total_dim() const { return total_; }

  int flat_index(const std::vector<int>& multi) const;
  std::vector<int> multi_index(int flat) const;

 private:
  std::vector<int> dims_;
  int total_ = 1;
};

Ket tensor(const Ket& a, const Ket& b);
Operator tensor(const Operator& a, const Operator& b);

/// Reduced density matrix on factor `keep`.
DensityMatrix partial_trace(const DensityMatrix& rho, const CompositeSpace& space, int keep);
/// Reduced density matrix of a pure state without forming |psi><psi|.
DensityMatrix reduced_state(const Ket& psi, const CompositeSpace& space, int keep);

struct SchmidtTerm {
  double coeff = 0.0;
  Ket left;
  Ket right;
};

struct SchmidtDecomposition {
  std::vector<SchmidtTerm> terms;  // coefficients descending
  /// False when two nonzero coefficients are closer than `kDegeneracyGap`;
  /// the basis is then fixed only by the phase convention.
  bool generic = true;
  double min_gap = 0.0;

  static constexpr double kDegeneracyGap = 1e-8;

  Ket reconstruct() const;
};

/// Schmidt decomposition over a two-factor space. Phase convention: the
/// first non-negligible component of each left vector is real positive.
SchmidtDecomposition schmidt_decompose(const Ket& psi, const CompositeSpace& space);

struct Eigensystem {
  RealVector values;  // ascending
  Operator vectors;   // column k pairs with values(k)
};

/// Eigen-decomposition of a Hermitian operator. Throws ValidationError
/// when max|O - O^dag| exceeds `rel_tol * max|O|`.
Eigensystem eig_hermitian(const Operator& op, double rel_tol = 1e-10);

cplx expectation(const Ket& psi, const Operator& op);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double purity(const DensityMatrix& rho);

bool is_hermitian(const Operator& op, double rel_tol = 1e-12);
bool is_unitary(const Operator& u, double tol = 1e-10);
double hermiticity_defect(const Operator& op);

/// Throws ValidationError unless rho is Hermitian, unit trace and
/// numerically positive (tolerances from the DensityMatrix contract).
void check_density_matrix(const DensityMatrix& rho);

DensityMatrix projector(const Ket& psi);
Ket basis(int dim, int index);

// Pauli matrices in the {|0>, |1>} basis, sigma_z |0> = |0>.
Operator sigma_x();
Operator sigma_y();
Operator sigma_z();
/// |1><0|: lowers |0> (excited) to |1> (ground).
Operator sigma_minus();

// Random instances for property tests and demo models.
Ket random_state(int dim, SplitMix64& rng);
Operator random_operator(int dim, SplitMix64& rng);
Operator random_hermitian(int dim, SplitMix64& rng);
Operator random_unitary(int dim, SplitMix64& rng);
DensityMatrix random_density(int dim, SplitMix64& rng);

/// Multiplies `v` by the phase that makes its largest-magnitude component
/// real positive; returns the applied phase.
cplx fix_phase_largest(Ket& v);

}  // namespace qunravel::hilbert

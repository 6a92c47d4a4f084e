#include "qunravel/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qunravel::hilbert {

CompositeSpace::CompositeSpace(std::vector<int> factor_dims) : dims_(std::move(factor_dims)) {
  if (dims_.empty()) throw ValidationError("composite space needs at least one factor");
  for (int d : dims_) {
    if (d <= 0) throw ValidationError("factor dimensions must be positive");
    total_ *= d;
  }
}

int CompositeSpace::flat_index(const std::vector<int>& multi) const {
  if (multi.size() != dims_.size()) throw ValidationError("multi-index has wrong length");
  int flat = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (multi[k] < 0 || multi[k] >= dims_[k]) throw ValidationError("multi-index out of range");
    flat = flat * dims_[k] + multi[k];
  }
  return flat;
}

std::vector<int> CompositeSpace::multi_index(int flat) const {
  if (flat < 0 || flat >= total_) throw ValidationError("flat index out of range");
  std::vector<int> multi(dims_.size());
  for (std::size_t k = dims_.size(); k-- > 0;) {
    multi[k] = flat % dims_[k];
    flat /= dims_[k];
  }
  return multi;
}

Ket tensor(const Ket& a, const Ket& b) {
  Ket out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

Operator tensor(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

struct Split {
  int left, mid, right;
};

Split split_at(const CompositeSpace& space, int keep) {
  if (keep < 0 || keep >= space.factors()) throw ValidationError("kept factor index out of range");
  Split s{1, space.dim(keep), 1};
  for (int k = 0; k < keep; ++k) s.left *= space.dim(k);
  for (int k = keep + 1; k < space.factors(); ++k) s.right *= space.dim(k);
  return s;
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho, const CompositeSpace& space, int keep) {
  const Split s = split_at(space, keep);
  if (rho.rows() != space.total_dim() || rho.cols() != space.total_dim())
    throw ValidationError("density matrix dimension does not match composite space");
  DensityMatrix out = DensityMatrix::Zero(s.mid, s.mid);
  for (int l = 0; l < s.left; ++l)
    for (int a = 0; a < s.mid; ++a)
      for (int b = 0; b < s.mid; ++b) {
        cplx acc = 0.0;
        const int ra = (l * s.mid + a) * s.right;
        const int rb = (l * s.mid + b) * s.right;
        for (int r = 0; r < s.right; ++r) acc += rho(ra + r, rb + r);
        out(a, b) += acc;
      }
  return out;
}

DensityMatrix reduced_state(const Ket& psi, const CompositeSpace& space, int keep) {
  const Split s = split_at(space, keep);
  if (psi.size() != space.total_dim()) throw ValidationError("state dimension does not match composite space");
  DensityMatrix out = DensityMatrix::Zero(s.mid, s.mid);
  for (int l = 0; l < s.left; ++l) {
    // rows: kept index, cols: right index
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(
        psi.data() + static_cast<Eigen::Index>(l) * s.mid * s.right, s.mid, s.right);
    out.noalias() += block * block.adjoint();
  }
  return out;
}

Ket SchmidtDecomposition::reconstruct() const {
  if (terms.empty()) return Ket();
  Ket out = Ket::Zero(terms.front().left.size() * terms.front().right.size());
  for (const auto& t : terms) out += t.coeff * tensor(t.left, t.right);
  return out;
}

SchmidtDecomposition schmidt_decompose(const Ket& psi, const CompositeSpace& space) {
  if (space.factors() != 2) throw ValidationError("Schmidt decomposition needs a two-factor space");
  if (psi.size() != space.total_dim()) throw ValidationError("state dimension does not match composite space");
  const int da = space.dim(0);
  const int db = space.dim(1);
  Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> amp =
      Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(psi.data(), da, db);
  Eigen::JacobiSVD<Operator> svd(Operator(amp), Eigen::ComputeFullU | Eigen::ComputeFullV);

  SchmidtDecomposition out;
  const int n = std::min(da, db);
  out.terms.reserve(static_cast<std::size_t>(n));
  const RealVector& s = svd.singularValues();
  for (int k = 0; k < n; ++k) {
    SchmidtTerm t;
    t.coeff = s(k);
    t.left = svd.matrixU().col(k);
    t.right = svd.matrixV().col(k).conjugate();
    for (Eigen::Index i = 0; i < t.left.size(); ++i) {
      if (std::abs(t.left(i)) > 1e-12) {
        const cplx phase = std::abs(t.left(i)) / t.left(i);
        t.left *= phase;
        t.right /= phase;
        break;
      }
    }
    out.terms.push_back(std::move(t));
  }
  out.min_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < n; ++k) {
    if (s(k) <= SchmidtDecomposition::kDegeneracyGap) break;
    const double gap = s(k) - s(k + 1);
    out.min_gap = std::min(out.min_gap, gap);
    if (gap < SchmidtDecomposition::kDegeneracyGap) out.generic = false;
  }
  return out;
}

double hermiticity_defect(const Operator& op) {
  if (op.rows() != op.cols()) return std::numeric_limits<double>::infinity();
  return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Operator& op, double rel_tol) {
  if (op.rows() != op.cols()) return false;
  if (op.size() == 0) return true;
  return hermiticity_defect(op) <= rel_tol * std::max(op.cwiseAbs().maxCoeff(), 1e-300);
}

bool is_unitary(const Operator& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - Operator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

Eigensystem eig_hermitian(const Operator& op, double rel_tol) {
  if (op.rows() != op.cols()) throw ValidationError("eig_hermitian: operator is not square");
  if (!is_hermitian(op, rel_tol)) throw ValidationError("eig_hermitian: operator is not Hermitian");
  const Operator sym = 0.5 * (op + op.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalContractError("eig_hermitian: solver did not converge");
  Eigensystem out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index k = 0; k < out.vectors.cols(); ++k) {
    Ket v = out.vectors.col(k);
    fix_phase_largest(v);
    out.vectors.col(k) = v;
  }
  return out;
}

cplx expectation(const Ket& psi, const Operator& op) {
  if (psi.size() != op.rows() || op.rows() != op.cols()) throw ValidationError("expectation: dimension mismatch");
  return psi.dot(op * psi);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("trace_distance: dimension mismatch");
  const Operator diff = 0.5 * ((a - b) + (a - b).adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(diff, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double purity(const DensityMatrix& rho) { return (rho * rho).trace().real(); }

void check_density_matrix(const DensityMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw ValidationError("density matrix must be square and non-empty");
  if (hermiticity_defect(rho) > 1e-12) throw ValidationError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > 1e-10) throw ValidationError("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Operator> solver(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -1e-10) throw ValidationError("density matrix has a negative eigenvalue");
}

DensityMatrix projector(const Ket& psi) { return psi * psi.adjoint(); }

Ket basis(int dim, int index) {
  if (index < 0 || index >= dim) throw ValidationError("basis index out of range");
  Ket v = Ket::Zero(dim);
  v(index) = 1.0;
  return v;
}

Operator sigma_x() {
  Operator m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Operator sigma_y() {
  Operator m(2, 2);
  m << 0.0, -I, I, 0.0;
  return m;
}

Operator sigma_z() {
  Operator m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Operator sigma_minus() {
  Operator m = Operator::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

namespace {

cplx gaussian_complex(SplitMix64& rng) { return {rng.normal(), rng.normal()}; }

}  // namespace

Ket random_state(int dim, SplitMix64& rng) {
  Ket v(dim);
  for (int i = 0; i < dim; ++i) v(i) = gaussian_complex(rng);
  return v.normalized();
}

Operator random_operator(int dim, SplitMix64& rng) {
  Operator m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = gaussian_complex(rng);
  return m;
}

Operator random_hermitian(int dim, SplitMix64& rng) {
  const Operator m = random_operator(dim, rng);
  return 0.5 * (m + m.adjoint());
}

Operator random_unitary(int dim, SplitMix64& rng) {
  const Operator g = random_operator(dim, rng);
  Eigen::HouseholderQR<Operator> qr(g);
  Operator q = qr.householderQ();
  const Operator r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < dim; ++k) {
    const cplx d = r(k, k);
    if (std::abs(d) > 0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

DensityMatrix random_density(int dim, SplitMix64& rng) {
  const Operator g = random_operator(dim, rng);
  DensityMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

cplx fix_phase_largest(Ket& v) {
  if (v.size() == 0) return 1.0;
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const double mag = std::abs(v(imax));
  if (mag == 0.0) return 1.0;
  const cplx phase = mag / v(imax);
  v *= phase;
  v(imax) = cplx(v(imax).real(), 0.0);
  return phase;
}

}  // namespace qunravel::hilbert

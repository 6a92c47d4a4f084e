#include "qunravel/grid.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace qunravel {

PositionGrid::PositionGrid(int n, double length, double hbar) : n_(n), length_(length), hbar_(hbar) {
  if (n < 2) throw ValidationError("grid needs at least two points");
  if (!(length > 0.0)) throw ValidationError("grid length must be positive");
  if (!(hbar > 0.0)) throw ValidationError("hbar must be positive");
  x_.resize(n);
  p_.resize(n);
  for (int j = 0; j < n; ++j) {
    x_(j) = x(j);
    p_(j) = p_bin(j);
  }
}

double PositionGrid::p_bin(int k) const {
  const int signed_k = (k < (n_ + 1) / 2) ? k : k - n_;
  return hbar_ * 2.0 * std::numbers::pi * signed_k / length_;
}

namespace {

thread_local Eigen::FFT<double> fft_engine;

}  // namespace

Ket PositionGrid::to_momentum(const Ket& psi) const {
  if (psi.size() != n_) throw ValidationError("grid: state dimension mismatch");
  // The grid starts at -L/2, not 0: absorb the offset phase so momentum
  // eigenstates e^{i p x / hbar} map to single bins with unit modulus.
  Ket in = psi;
  Ket out(n_);
  fft_engine.fwd(out, in);
  const double x0 = x(0);
  for (int k = 0; k < n_; ++k) out(k) *= std::exp(-I * p_(k) * x0 / hbar_) / std::sqrt(static_cast<double>(n_));
  return out;
}

Ket PositionGrid::from_momentum(const Ket& phi) const {
  if (phi.size() != n_) throw ValidationError("grid: state dimension mismatch");
  Ket in(n_);
  const double x0 = x(0);
  for (int k = 0; k < n_; ++k) in(k) = phi(k) * std::exp(I * p_(k) * x0 / hbar_);
  Ket out(n_);
  fft_engine.inv(out, in);
  return out * std::sqrt(static_cast<double>(n_));
}

Ket PositionGrid::apply_momentum_function(const RealVector& f, const Ket& psi) const {
  Ket phi = to_momentum(psi);
  phi.array() *= f.array().cast<cplx>();
  return from_momentum(phi);
}

Ket PositionGrid::apply_momentum(const Ket& psi) const { return apply_momentum_function(p_, psi); }

Operator PositionGrid::position_operator() const { return x_.cast<cplx>().asDiagonal(); }

Operator PositionGrid::momentum_function(const RealVector& f) const {
  // F^dag diag(f) F is circulant: entry (a, b) depends on (a - b) mod n.
  Ket column(n_);
  for (int d = 0; d < n_; ++d) {
    cplx acc = 0.0;
    for (int k = 0; k < n_; ++k) acc += f(k) * std::exp(I * (p_(k) * dx() * d / hbar_));
    column(d) = acc / static_cast<double>(n_);
  }
  Operator op(n_, n_);
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) op(a, b) = column((a - b + n_) % n_);
  return 0.5 * (op + op.adjoint());
}

Operator PositionGrid::momentum_operator() const { return momentum_function(p_); }

}  // namespace qunravel

#pragma once

#include "qunravel/core.hpp"

namespace qunravel {

/// Uniform periodic position grid of `n` points on [-L/2, L/2). Position
/// is diagonal; momentum is defined spectrally on the lattice
/// p_k = hbar * 2*pi*k/L, k in [-n/2, n/2), so both act exactly on
/// band-limited states. Amplitudes are stored with the sqrt(dx) weight
/// absorbed, so a normalized state has sum |psi_j|^2 = 1.
class PositionGrid {
 public:
  PositionGrid(int n, double length, double hbar = 1.0);

  int size() const { return n_; }
  double length() const { return length_; }
  double hbar() const { return hbar_; }
  double dx() const { return length_ / n_; }
  double x(int j) const { return -0.5 * length_ + dx() * j; }
  /// Momentum value of the k-th DFT bin (standard FFT ordering).
  double p_bin(int k) const;
  double p_max() const { return hbar_ * 3.14159265358979323846 / dx(); }

  const RealVector& positions() const { return x_; }
  const RealVector& momenta() const { return p_; }  // FFT ordering

  Operator position_operator() const;
  Operator momentum_operator() const;
  /// f(p) diagonal in momentum, dense in position.
  Operator momentum_function(const RealVector& f_of_bins) const;

  Ket apply_momentum(const Ket& psi) const;
  Ket apply_momentum_function(const RealVector& f_of_bins, const Ket& psi) const;
  Ket to_momentum(const Ket& psi) const;    // unitary DFT, FFT ordering
  Ket from_momentum(const Ket& phi) const;  // inverse of to_momentum

  /// Samples a wave function: amplitude_j = sqrt(dx) * f(x_j).
  template <class F>
  Ket sample(F&& f) const {
    Ket v(n_);
    const double w = std::sqrt(dx());
    for (int j = 0; j < n_; ++j) v(j) = w * f(x(j));
    return v;
  }

 private:
  int n_;
  double length_;
  double hbar_;
  RealVector x_;
  RealVector p_;
};

}  // namespace qunravel

#pragma once

#include <vector>

#include "qunravel/core.hpp"
#include "qunravel/grid.hpp"

namespace qunravel::phase {

/// Regular grid over the plane (x, p) or the cylinder (θ, L). Plane points
/// sit at cell centers; cylinder angles are θ_i = 2πi/nq on [0, 2π).
struct PhaseGrid {
  enum class Geometry { plane, cylinder };

  Geometry geometry = Geometry::plane;
  double q_min = -1.0, q_max = 1.0;
  double p_min = -1.0, p_max = 1.0;
  int nq = 64, np = 64;

  static PhaseGrid plane(double x_min, double x_max, int nx, double p_min, double p_max, int np);
  static PhaseGrid cylinder(int ntheta, double l_min, double l_max, int nl);

  double dq() const { return (q_max - q_min) / nq; }
  double dp() const { return (p_max - p_min) / np; }
  double q(int i) const;
  double p(int j) const { return p_min + (j + 0.5) * dp(); }
  double cell_area() const { return dq() * dp(); }
  void validate() const;
};

/// Field values (nq x np), in 1/action.
struct PhaseField {
  PhaseGrid grid;
  RealMatrix values;

  double mass() const { return values.sum() * grid.cell_area(); }
  double min() const { return values.minCoeff(); }
};

/// Angular-momentum basis |m>, m in [-(dim-1)/2, (dim-1)/2], L = hbar m.
struct AngularBasis {
  int dim = 201;
  double hbar = 1.0;
  int m_max() const { return (dim - 1) / 2; }
};

/// Gaussian ψ(x) ∝ exp(-(x-x0)^2/(2σ^2) + i p0 x/hbar), so var_x = σ^2/2 and
/// var_p = hbar^2/(2σ^2). Throws ValidationError when σ or hbar/σ is not
/// resolved by the grid, or the packet is within 4σ of the window edge.
Ket coherent_state(double x0, double p0, double sigma, const PositionGrid& grid);

/// Rotor coherent state: c_m ∝ exp(-w^2 (m - L0/hbar)^2 / 2 - i m θ0), an
/// angle Gaussian of width w wrapped onto the circle.
Ket coherent_state(double theta0, double l0, double w, const AngularBasis& basis);

/// W(x,p) = (1/2πhbar) ∫ ρ(x + y/2, x - y/2) e^{-i p y/hbar} dy on a plane
/// grid, with the state interpolated spectrally between grid points and the
/// integral restricted to pairs x ± y/2 inside the position window.
/// Throws ValidationError when more than 1e-6 of the momentum population
/// sits in the outer fifth of the momentum band (aliasing).
PhaseField wigner(const Ket& psi, const PositionGrid& grid, const PhaseGrid& pg);
PhaseField wigner(const DensityMatrix& rho, const PositionGrid& grid, const PhaseGrid& pg);

/// |<coherent(x, p, σ)|ψ>|^2 / (2πhbar).
PhaseField husimi(const Ket& psi, const PositionGrid& grid, const PhaseGrid& pg, double sigma);
/// Cylinder version with rotor coherent states of angular width w.
PhaseField husimi(const Ket& psi, const AngularBasis& basis, const PhaseGrid& pg, double w);

struct FieldMoments {
  double mass = 0.0;
  double mean_q = 0.0, mean_p = 0.0;
  double var_q = 0.0, var_p = 0.0, cov_qp = 0.0;
  /// Cylinder only: mean resultant length |E e^{iθ}|. var_q and cov_qp
  /// then use θ - mean_q wrapped into (-π, π].
  double resultant = 0.0;
};

/// Riemann-sum moments. Throws ValidationError when the mass is below 0.99.
FieldMoments field_moments(const PhaseField& field);

}  // namespace qunravel::phase

#include "qunravel/phase_space.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "qunravel/hilbert.hpp"

namespace qunravel::phase {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace

PhaseGrid PhaseGrid::plane(double x_min, double x_max, int nx, double p_min, double p_max, int np) {
  PhaseGrid g{Geometry::plane, x_min, x_max, p_min, p_max, nx, np};
  g.validate();
  return g;
}

PhaseGrid PhaseGrid::cylinder(int ntheta, double l_min, double l_max, int nl) {
  PhaseGrid g{Geometry::cylinder, 0.0, 2.0 * kPi, l_min, l_max, ntheta, nl};
  g.validate();
  return g;
}

double PhaseGrid::q(int i) const {
  return geometry == Geometry::cylinder ? q_min + i * dq() : q_min + (i + 0.5) * dq();
}

void PhaseGrid::validate() const {
  if (nq < 2 || np < 2) throw ValidationError("phase grid needs at least 2 points per axis");
  if (!(q_max > q_min) || !(p_max > p_min)) throw ValidationError("phase grid ranges must be increasing");
  if (geometry == Geometry::cylinder && (q_min != 0.0 || q_max != 2.0 * kPi))
    throw ValidationError("cylinder angle range must be [0, 2π)");
}

Ket coherent_state(double x0, double p0, double sigma, const PositionGrid& grid) {
  if (!(sigma > 0.0)) throw ValidationError("coherent state width must be positive");
  const double hbar = grid.hbar();
  if (grid.dx() > 0.5 * sigma) throw ValidationError("grid spacing does not resolve the coherent-state width");
  if (std::abs(p0) + 4.0 * hbar / sigma > grid.p_max())
    throw ValidationError("grid momentum band does not contain the coherent state");
  if (std::abs(x0) + 4.0 * sigma > 0.5 * grid.length())
    throw ValidationError("coherent state is too close to the grid edge");
  Ket psi = grid.sample([&](double x) {
    return std::exp(-(x - x0) * (x - x0) / (2.0 * sigma * sigma) + I * (p0 * x / hbar));
  });
  psi.normalize();
  return psi;
}

Ket coherent_state(double theta0, double l0, double w, const AngularBasis& basis) {
  if (!(w > 0.0)) throw ValidationError("coherent state width must be positive");
  if (basis.dim < 1 || basis.dim % 2 == 0) throw ValidationError("angular basis dimension must be odd");
  const int mm = basis.m_max();
  const double ell = l0 / basis.hbar;
  Ket c(basis.dim);
  for (int k = 0; k < basis.dim; ++k) {
    const double m = k - mm;
    c(k) = std::exp(-0.5 * w * w * (m - ell) * (m - ell) - I * (m * theta0));
  }
  c.normalize();
  return c;
}

PhaseField wigner(const DensityMatrix& rho, const PositionGrid& grid, const PhaseGrid& pg) {
  pg.validate();
  if (pg.geometry != PhaseGrid::Geometry::plane) throw ValidationError("Wigner fields are computed on the plane");
  const int n = grid.size();
  if (rho.rows() != n || rho.cols() != n) throw ValidationError("state dimension does not match the grid");
  const double hbar = grid.hbar();

  // ρ in the momentum basis: F ρ F^dag.
  Operator left(n, n);
  for (int c = 0; c < n; ++c) left.col(c) = grid.to_momentum(rho.col(c));
  Operator mom(n, n);
  for (int r = 0; r < n; ++r) mom.row(r) = grid.to_momentum(left.row(r).adjoint()).adjoint();

  const RealVector& p = grid.momenta();
  double outer = 0.0;
  for (int k = 0; k < n; ++k)
    if (std::abs(p(k)) > 0.8 * grid.p_max()) outer += mom(k, k).real();
  if (outer > 1e-6 * std::abs(mom.trace().real()))
    throw ValidationError("state is not resolved by the grid (momentum aliasing)");

  std::vector<int> q(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) q[static_cast<std::size_t>(k)] = static_cast<int>(std::lround(p(k) * grid.length() / (2.0 * kPi * hbar)));

  const int n2 = 2 * n;
  const double h = 0.5 * grid.dx();
  Eigen::FFT<double> fft;
  PhaseField field{pg, RealMatrix::Zero(pg.nq, pg.np)};
  Eigen::VectorXcd d(n2), g(n2);
  for (int i = 0; i < pg.nq; ++i) {
    const double x = pg.q(i);
    Eigen::VectorXcd phase(n);
    for (int k = 0; k < n; ++k) phase(k) = std::exp(I * (p(k) * x / hbar));
    d.setZero();
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        const int idx = ((q[static_cast<std::size_t>(k)] + q[static_cast<std::size_t>(l)]) % n2 + n2) % n2;
        d(idx) += mom(k, l) * phase(k) * std::conj(phase(l));
      }
    fft.inv(g, d);
    g *= static_cast<double>(n2) / grid.length();  // g(k) = ρ(x + k h, x - k h)
    for (int j = 0; j < pg.np; ++j) {
      const double pj = pg.p(j);
      cplx acc = 0.0;
      for (int k = -n; k < n; ++k) {
        // Both x ± s inside the window; periodic images do not contribute.
        if (std::abs(x) + std::abs(k) * h >= 0.5 * grid.length()) continue;
        acc += g((k + n2) % n2) * std::exp(-I * (2.0 * pj * k * h / hbar));
      }
      field.values(i, j) = acc.real() * h / (kPi * hbar);
    }
  }
  return field;
}

PhaseField wigner(const Ket& psi, const PositionGrid& grid, const PhaseGrid& pg) {
  return wigner(DensityMatrix(psi * psi.adjoint()), grid, pg);
}

PhaseField husimi(const Ket& psi, const PositionGrid& grid, const PhaseGrid& pg, double sigma) {
  pg.validate();
  if (pg.geometry != PhaseGrid::Geometry::plane) throw ValidationError("plane Husimi needs a plane grid");
  if (!(sigma > 0.0)) throw ValidationError("Husimi smoothing width must be positive");
  const int n = grid.size();
  if (psi.size() != n) throw ValidationError("state dimension does not match the grid");
  const double hbar = grid.hbar();
  const double norm = std::sqrt(grid.dx()) * std::pow(kPi * sigma * sigma, -0.25);

  Operator g(pg.nq, n);
  for (int i = 0; i < pg.nq; ++i) {
    const double x = pg.q(i);
    for (int j = 0; j < n; ++j) {
      double dxj = grid.x(j) - x;
      dxj -= grid.length() * std::round(dxj / grid.length());
      g(i, j) = norm * std::exp(-dxj * dxj / (2.0 * sigma * sigma)) * psi(j);
    }
  }
  Operator e(n, pg.np);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < pg.np; ++k) e(j, k) = std::exp(-I * (pg.p(k) * grid.x(j) / hbar));
  const Operator overlap = g * e;
  return {pg, overlap.cwiseAbs2() / (2.0 * kPi * hbar)};
}

PhaseField husimi(const Ket& psi, const AngularBasis& basis, const PhaseGrid& pg, double w) {
  pg.validate();
  if (pg.geometry != PhaseGrid::Geometry::cylinder) throw ValidationError("rotor Husimi needs a cylinder grid");
  if (!(w > 0.0)) throw ValidationError("Husimi smoothing width must be positive");
  if (psi.size() != basis.dim) throw ValidationError("state dimension does not match the angular basis");
  const int mm = basis.m_max();
  Operator g(pg.np, basis.dim);
  for (int l = 0; l < pg.np; ++l) {
    const double ell = pg.p(l) / basis.hbar;
    double n2 = 0.0;
    for (int k = 0; k < basis.dim; ++k) {
      const double gk = std::exp(-0.5 * w * w * std::pow(k - mm - ell, 2));
      g(l, k) = gk * psi(k);
      n2 += gk * gk;
    }
    g.row(l) /= std::sqrt(n2);
  }
  Operator e(basis.dim, pg.nq);
  for (int k = 0; k < basis.dim; ++k)
    for (int i = 0; i < pg.nq; ++i) e(k, i) = std::exp(I * (static_cast<double>(k - mm) * pg.q(i)));
  const Operator overlap = g * e;  // (L, θ)
  return {pg, overlap.transpose().cwiseAbs2() / (2.0 * kPi * basis.hbar)};
}

FieldMoments field_moments(const PhaseField& field) {
  const auto& pg = field.grid;
  FieldMoments m;
  m.mass = field.mass();
  if (m.mass < 0.99) throw ValidationError("field mass below 0.99; moments would be biased");
  const double area = pg.cell_area();
  const bool cyl = pg.geometry == PhaseGrid::Geometry::cylinder;
  double sc = 0.0, ss = 0.0, sp = 0.0, sq = 0.0;
  for (int i = 0; i < pg.nq; ++i)
    for (int j = 0; j < pg.np; ++j) {
      const double w = field.values(i, j) * area;
      sp += w * pg.p(j);
      sq += w * pg.q(i);
      sc += w * std::cos(pg.q(i));
      ss += w * std::sin(pg.q(i));
    }
  m.mean_p = sp / m.mass;
  if (cyl) {
    m.mean_q = std::atan2(ss, sc);
    if (m.mean_q < 0.0) m.mean_q += 2.0 * kPi;
    m.resultant = std::hypot(sc, ss) / m.mass;
  } else {
    m.mean_q = sq / m.mass;
  }
  double vq = 0.0, vp = 0.0, cqp = 0.0;
  for (int i = 0; i < pg.nq; ++i) {
    const double dq = cyl ? wrap_pi(pg.q(i) - m.mean_q) : pg.q(i) - m.mean_q;
    for (int j = 0; j < pg.np; ++j) {
      const double w = field.values(i, j) * area;
      const double dp = pg.p(j) - m.mean_p;
      vq += w * dq * dq;
      vp += w * dp * dp;
      cqp += w * dq * dp;
    }
  }
  m.var_q = vq / m.mass;
  m.var_p = vp / m.mass;
  m.cov_qp = cqp / m.mass;
  return m;
}

}  // namespace qunravel::phase

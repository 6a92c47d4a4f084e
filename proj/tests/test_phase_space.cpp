#include "test_support.hpp"

#include <numbers>

#include "qunravel/hilbert.hpp"
#include "qunravel/lindblad.hpp"
#include "qunravel/phase_space.hpp"

using namespace qunravel;
using namespace qunravel::phase;
using qtest::for_all;

namespace {

constexpr double kPi = std::numbers::pi;

/// Vacuum Wigner function of width σ (var_x = σ^2/2) centered at (x0, p0).
double gaussian_wigner(double x, double p, double x0, double p0, double sigma, double hbar) {
  const double u = x - x0, v = p - p0;
  return std::exp(-u * u / (sigma * sigma) - sigma * sigma * v * v / (hbar * hbar)) / (kPi * hbar);
}

/// Even (+) or odd (-) superposition of real Gaussians at ±a.
struct Cat {
  double a, sigma, hbar, sign;
  double overlap() const { return std::exp(-a * a / (sigma * sigma)); }
  double norm() const { return 1.0 / (2.0 * (1.0 + sign * overlap())); }
  double amplitude(double x) const {
    const double g = std::pow(kPi * sigma * sigma, -0.25);
    return std::sqrt(norm()) * g *
           (std::exp(-(x - a) * (x - a) / (2 * sigma * sigma)) + sign * std::exp(-(x + a) * (x + a) / (2 * sigma * sigma)));
  }
  double wigner(double x, double p) const {
    return norm() * (gaussian_wigner(x, p, a, 0, sigma, hbar) + gaussian_wigner(x, p, -a, 0, sigma, hbar) +
                     2.0 * sign * gaussian_wigner(x, p, 0, 0, sigma, hbar) * std::cos(2.0 * a * p / hbar));
  }
  Ket sample(const PositionGrid& g) const {
    Ket psi = g.sample([&](double x) { return cplx(amplitude(x)); });
    return psi;
  }
};

double max_diff(const RealMatrix& a, const RealMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("phase grids") {
  const PhaseGrid cyl = PhaseGrid::cylinder(8, -1.0, 1.0, 4);
  CHECK(cyl.q(0) == 0.0);
  CHECK(cyl.q(2) == doctest::Approx(kPi / 2));
  CHECK_NOTHROW(cyl.validate());
  PhaseGrid bad = cyl;
  bad.q_max = 6.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  const PhaseGrid plane = PhaseGrid::plane(-1.0, 1.0, 4, 0.0, 2.0, 2);
  CHECK(plane.q(0) == doctest::Approx(-0.75));
  CHECK(plane.p(1) == doctest::Approx(1.5));
  CHECK(plane.cell_area() == doctest::Approx(0.5));
  CHECK_THROWS_AS(PhaseGrid::plane(1.0, -1.0, 4, 0.0, 1.0, 4).validate(), ValidationError);
}

TEST_CASE("coherent states") {
  const PositionGrid grid(128, 16.0, 0.8);
  const Ket vac = coherent_state(0.0, 0.0, 1.0, grid);
  CHECK(vac.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(hilbert::expectation(vac, grid.position_operator()).real()) < 1e-12);
  // Parity: ψ(x_j) = ψ(-x_j) on the symmetric part of the lattice.
  for (int j = 1; j < 64; ++j) CHECK(std::abs(vac(j) - vac(128 - j)) < 1e-14);

  const Operator x = grid.position_operator(), p = grid.momentum_operator();
  for_all(20, 71, [&](SplitMix64& rng, int) {
    const double x0 = qtest::draw_real(rng, -3.0, 3.0), p0 = qtest::draw_real(rng, -3.0, 3.0);
    const double sigma = qtest::draw_real(rng, 0.5, 1.2);
    const Ket psi = coherent_state(x0, p0, sigma, grid);
    const double mx = hilbert::expectation(psi, x).real(), mp = hilbert::expectation(psi, p).real();
    CHECK(std::abs(mx - x0) < 1e-8);
    CHECK(std::abs(mp - p0) < 1e-8);
    const double vx = hilbert::expectation(psi, Operator(x * x)).real() - mx * mx;
    const double vp = hilbert::expectation(psi, Operator(p * p)).real() - mp * mp;
    CHECK(vx == doctest::Approx(sigma * sigma / 2).epsilon(1e-8));
    CHECK(std::abs(vx * vp - 0.25 * grid.hbar() * grid.hbar()) < 1e-6);
  });
  CHECK(std::abs(hilbert::expectation(coherent_state(1.3, -0.7, 1.0, grid), x).real() - 1.3) < 1e-8);

  CHECK_THROWS_AS(coherent_state(0.0, 0.0, 0.1, grid), ValidationError);
  CHECK_THROWS_AS(coherent_state(6.0, 0.0, 1.0, grid), ValidationError);
  CHECK_THROWS_AS(coherent_state(0.0, 0.0, -1.0, grid), ValidationError);

  const AngularBasis basis{101, 1.0};
  const Ket rot = coherent_state(1.0, 5.0, 0.5, basis);
  CHECK(rot.norm() == doctest::Approx(1.0));
  double ml = 0.0;
  for (int k = 0; k < basis.dim; ++k) ml += std::norm(rot(k)) * (k - basis.m_max());
  CHECK(ml == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(coherent_state(0.0, 0.0, 0.5, AngularBasis{100, 1.0}), ValidationError);
}

TEST_CASE("Wigner function of Gaussian states") {
  const double hbar = 0.7;
  const PositionGrid grid(128, 16.0, hbar);
  const PhaseGrid pg = PhaseGrid::plane(-6.0, 6.0, 96, -6.0, 6.0, 96);
  const PhaseField vac = wigner(coherent_state(0.0, 0.0, 1.0, grid), grid, pg);
  double err = 0.0;
  for (int i = 0; i < pg.nq; ++i)
    for (int j = 0; j < pg.np; ++j)
      err = std::max(err, std::abs(vac.values(i, j) - gaussian_wigner(pg.q(i), pg.p(j), 0, 0, 1.0, hbar)));
  CHECK(err < 1e-10);
  CHECK(vac.values.maxCoeff() <= 1.0 / (kPi * hbar));
  CHECK(gaussian_wigner(0, 0, 0, 0, 1.0, hbar) == doctest::Approx(1.0 / (kPi * hbar)));
  CHECK(std::abs(vac.mass() - 1.0) < 1e-6);

  const FieldMoments m = field_moments(vac);
  CHECK(std::abs(m.mean_q) < 1e-12);
  CHECK(std::abs(m.mean_p) < 1e-12);
  CHECK(std::abs(m.var_q * m.var_p - 0.25 * hbar * hbar) < 1e-4);

  // Translation by whole cells: shifted state on the shifted grid.
  const double x0 = 10 * pg.dq(), p0 = -6 * pg.dp();
  const PhaseField moved = wigner(coherent_state(x0, p0, 1.0, grid), grid, pg);
  const PhaseGrid back = PhaseGrid::plane(-6.0 - x0, 6.0 - x0, 96, -6.0 - p0, 6.0 - p0, 96);
  CHECK(max_diff(moved.values, wigner(coherent_state(0.0, 0.0, 1.0, grid), grid, back).values) < 1e-8);
  const PhaseGrid wide = PhaseGrid::plane(-7.0, 7.0, 112, -7.0, 7.0, 112);
  const FieldMoments mm = field_moments(wigner(coherent_state(x0, p0, 1.0, grid), grid, wide));
  const FieldMoments m0 = field_moments(wigner(coherent_state(0.0, 0.0, 1.0, grid), grid, wide));
  CHECK(mm.mean_q - m0.mean_q == doctest::Approx(x0).epsilon(1e-8));
  CHECK(mm.mean_p - m0.mean_p == doctest::Approx(p0).epsilon(1e-8));
}

TEST_CASE("cat-state Wigner function") {
  const double hbar = 1.0;
  const PositionGrid grid(128, 16.0, hbar);
  const PhaseGrid pg = PhaseGrid::plane(-7.0, 7.0, 112, -7.0, 7.0, 112);
  for (double sign : {1.0, -1.0}) {
    CAPTURE(sign);
    const Cat cat{1.5, 1.0, hbar, sign};
    const Ket psi = cat.sample(grid);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const PhaseField w = wigner(psi, grid, pg);
    double err = 0.0;
    for (int i = 0; i < pg.nq; ++i)
      for (int j = 0; j < pg.np; ++j) err = std::max(err, std::abs(w.values(i, j) - cat.wigner(pg.q(i), pg.p(j))));
    CHECK(err < 1e-10);
    CHECK(w.min() < -0.05);
    CHECK(std::abs(w.mass() - 1.0) < 1e-6);
    // Position marginal.
    for (int i = 0; i < pg.nq; ++i) {
      const double marginal = w.values.row(i).sum() * pg.dp();
      CHECK(std::abs(marginal - std::pow(cat.amplitude(pg.q(i)), 2)) < 1e-6);
    }
  }

  // Position dephasing removes the fringes.
  const PositionGrid coarse(64, 12.0, hbar);
  const Cat cat{1.5, 1.0, hbar, 1.0};
  const Ket psi = cat.sample(coarse);
  LindbladModel model;
  model.H = Operator::Zero(64, 64);
  model.lindblads = {Operator(3.0 * coarse.position_operator())};
  MasterOptions opt;
  opt.record_every = 1000;
  const MasterRun run = integrate_master(model, DensityMatrix(psi * psi.adjoint()), 5e-4, 1000, opt);
  const PhaseGrid pc = PhaseGrid::plane(-5.0, 5.0, 64, -6.0, 6.0, 64);
  CHECK(wigner(run.states.front(), coarse, pc).min() < -0.05);
  CHECK(wigner(run.states.back(), coarse, pc).min() > -1e-6);
}

TEST_CASE("aliasing is rejected") {
  const PositionGrid grid(64, 16.0, 1.0);
  const Ket narrow = grid.sample([](double x) { return cplx(std::exp(-x * x / (2 * 0.15 * 0.15))); }).normalized();
  CHECK_THROWS_AS(wigner(narrow, grid, PhaseGrid::plane(-1, 1, 8, -1, 1, 8)), ValidationError);
  CHECK_THROWS_AS(wigner(narrow, grid, PhaseGrid::cylinder(8, -1, 1, 8)), ValidationError);
}

TEST_CASE("Husimi function") {
  const double hbar = 0.8, sigma = 1.0;
  const PositionGrid grid(128, 16.0, hbar);
  const PhaseGrid pg = PhaseGrid::plane(-8.0, 8.0, 128, -8.0, 8.0, 128);
  const double bx = 0.9, bp = -1.1;
  const PhaseField h = husimi(coherent_state(bx, bp, sigma, grid), grid, pg, sigma);
  double err = 0.0;
  for (int i = 0; i < pg.nq; ++i)
    for (int j = 0; j < pg.np; ++j) {
      const double u = pg.q(i) - bx, v = pg.p(j) - bp;
      const double expected = std::exp(-u * u / (2 * sigma * sigma) - sigma * sigma * v * v / (2 * hbar * hbar)) / (2 * kPi * hbar);
      err = std::max(err, std::abs(h.values(i, j) - expected));
    }
  CHECK(err < 1e-10);
  CHECK(std::abs(h.mass() - 1.0) < 1e-6);
  CHECK(h.min() >= -1e-12);

  // Nonnegativity for random superpositions.
  for_all(10, 72, [&](SplitMix64& rng, int) {
    Ket psi = Ket::Zero(128);
    for (int k = 0; k < 3; ++k)
      psi += cplx(rng.normal(), rng.normal()) *
             coherent_state(qtest::draw_real(rng, -3, 3), qtest::draw_real(rng, -3, 3), sigma, grid);
    psi.normalize();
    const PhaseField f = husimi(psi, grid, pg, qtest::draw_real(rng, 0.6, 1.5));
    CHECK(f.min() >= -1e-12);
    CHECK(std::abs(f.mass() - 1.0) < 1e-6);
  });

  // Husimi = Wigner convolved with the vacuum Wigner of the smoothing width.
  const Cat cat{1.5, 1.0, hbar, -1.0};
  const Ket psi = cat.sample(grid);
  const PhaseGrid fine = PhaseGrid::plane(-8.0, 8.0, 128, -8.0, 8.0, 128);
  const PhaseField w = wigner(psi, grid, fine);
  const PhaseField hq = husimi(psi, grid, fine, sigma);
  for (int i : {40, 64, 70, 90})
    for (int j : {30, 64, 66, 100}) {
      double conv = 0.0;
      for (int a = 0; a < fine.nq; ++a)
        for (int b = 0; b < fine.np; ++b)
          conv += w.values(a, b) * gaussian_wigner(fine.q(i), fine.p(j), fine.q(a), fine.p(b), sigma, hbar);
      conv *= fine.cell_area();
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(conv - hq.values(i, j)) < 1e-6);
    }
}

TEST_CASE("cylinder Husimi function") {
  const AngularBasis basis{101, 1.0};
  const PhaseGrid pg = PhaseGrid::cylinder(64, -30.0, 30.0, 240);
  const PhaseField eig = husimi(hilbert::basis(101, 53), basis, pg, 0.5);
  for (int j = 0; j < pg.np; ++j)
    CHECK(eig.values.col(j).maxCoeff() - eig.values.col(j).minCoeff() < 1e-8);
  CHECK(std::abs(eig.mass() - 1.0) < 1e-6);

  const PhaseField coh = husimi(coherent_state(2.0, 5.0, 0.5, basis), basis, pg, 0.5);
  CHECK(coh.min() >= -1e-12);
  CHECK(std::abs(coh.mass() - 1.0) < 1e-6);
  const FieldMoments m = field_moments(coh);
  CHECK(m.mean_q == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(m.mean_p == doctest::Approx(5.0).epsilon(1e-8));
  CHECK(m.resultant > 0.5);
  CHECK(m.resultant < 1.0);
}

TEST_CASE("field moments") {
  const PhaseGrid pg = PhaseGrid::plane(-1.0, 3.0, 8, 2.0, 4.0, 8);
  PhaseField uniform{pg, RealMatrix::Constant(8, 8, 1.0 / 8.0)};
  const FieldMoments m = field_moments(uniform);
  CHECK(m.mass == doctest::Approx(1.0));
  CHECK(m.mean_q == doctest::Approx(1.0));
  CHECK(m.mean_p == doctest::Approx(3.0));
  uniform.values *= 0.5;
  CHECK_THROWS_AS(field_moments(uniform), ValidationError);
}

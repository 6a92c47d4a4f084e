#include "qunravel/lindblad.hpp"

#include <algorithm>
#include <cmath>

#include "qunravel/hilbert.hpp"

namespace qunravel {

void LindbladModel::validate() const {
  if (!(hbar > 0.0)) throw ValidationError("hbar must be positive", "model.hbar");
  if (H.rows() == 0 || H.rows() != H.cols()) throw ValidationError("Hamiltonian must be square and nonempty");
  if (!hilbert::is_hermitian(H, 1e-12)) throw ValidationError("Hamiltonian is not Hermitian");
  for (const auto& a : lindblads)
    if (a.rows() != H.rows() || a.cols() != H.cols()) throw ValidationError("Lindblad operator dimension mismatch");
  for (const auto& b : subtracted)
    if (b.rows() != H.rows() || b.cols() != H.cols()) throw ValidationError("subtracted operator dimension mismatch");
}

namespace {

// L(ρ) = Kρ + ρK^dag + sum AρA^dag - sum BρB^dag with
// K = -iH/hbar - (sum A^dag A - sum B^dag B)/2.
struct Generator {
  Operator k;
  const LindbladModel* model;

  explicit Generator(const LindbladModel& m) : model(&m) {
    k = (-I / m.hbar) * m.H;
    for (const auto& a : m.lindblads) k.noalias() -= 0.5 * a.adjoint() * a;
    for (const auto& b : m.subtracted) k.noalias() += 0.5 * b.adjoint() * b;
  }

  DensityMatrix operator()(const DensityMatrix& rho) const {
    DensityMatrix out = k * rho;
    out.noalias() += rho * k.adjoint();
    for (const auto& a : model->lindblads) out.noalias() += a * rho * a.adjoint();
    for (const auto& b : model->subtracted) out.noalias() -= b * rho * b.adjoint();
    return out;
  }
};

double spectral_norm(const Operator& op) {
  Eigen::JacobiSVD<Operator> svd(op);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

DensityMatrix liouvillian_apply(const LindbladModel& model, const DensityMatrix& rho) {
  if (rho.rows() != model.dim() || rho.cols() != model.dim())
    throw ValidationError("liouvillian_apply: density matrix dimension mismatch");
  return Generator(model)(rho);
}

double spectral_scale(const LindbladModel& model) {
  const auto eig = hilbert::eig_hermitian(model.H, 1e-10);
  double scale = eig.values.cwiseAbs().maxCoeff() / model.hbar;
  for (const auto& a : model.lindblads) scale += std::pow(spectral_norm(a), 2);
  for (const auto& b : model.subtracted) scale += std::pow(spectral_norm(b), 2);
  return scale;
}

MasterRun integrate_master(const LindbladModel& model, const DensityMatrix& rho0, double dt, int n_steps,
                           const MasterOptions& options) {
  model.validate();
  if (rho0.rows() != model.dim() || rho0.cols() != model.dim())
    throw ValidationError("integrate_master: initial state dimension mismatch");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive", "numerics.dt");
  if (n_steps < 0) throw ValidationError("number of steps must be nonnegative");
  if (options.record_every < 1) throw ValidationError("record_every must be at least 1");

  const Generator gen(model);
  MasterRun run;
  run.step_warning = dt * spectral_scale(model) > 0.1;
  run.min_eigenvalue = 1.0;
  const double trace0 = rho0.trace().real();

  auto record = [&](double t, const DensityMatrix& rho) {
    run.times.push_back(t);
    run.states.push_back(rho);
    if (options.check_positivity) {
      const DensityMatrix h = 0.5 * (rho + rho.adjoint());
      Eigen::SelfAdjointEigenSolver<Operator> solver(h, Eigen::EigenvaluesOnly);
      const double lo = solver.eigenvalues()(0);
      run.min_eigenvalue = std::min(run.min_eigenvalue, lo);
      if (lo < -1e-6) ++run.positivity_violations;
    }
  };

  DensityMatrix rho = rho0;
  record(0.0, rho);
  for (int s = 1; s <= n_steps; ++s) {
    const DensityMatrix k1 = gen(rho);
    const DensityMatrix k2 = gen(rho + 0.5 * dt * k1);
    const DensityMatrix k3 = gen(rho + 0.5 * dt * k2);
    const DensityMatrix k4 = gen(rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    run.max_trace_drift = std::max(run.max_trace_drift, std::abs(rho.trace().real() - trace0));
    if (s % options.record_every == 0 || s == n_steps) record(s * dt, rho);
  }
  return run;
}

LindbladModel shift_lindblad(const LindbladModel& model, const std::vector<cplx>& lambda) {
  if (lambda.size() != model.lindblads.size())
    throw ValidationError("shift_lindblad: one shift per Lindblad operator is required");
  LindbladModel out = model;
  const Operator id = Operator::Identity(model.dim(), model.dim());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const Operator& a = model.lindblads[i];
    out.H -= (0.5 * I * model.hbar) * (std::conj(lambda[i]) * a - lambda[i] * a.adjoint());
    out.lindblads[i] = a + lambda[i] * id;
  }
  out.H = 0.5 * (out.H + out.H.adjoint());
  return out;
}

LindbladModel rotate_lindblad(const LindbladModel& model, const Operator& u) {
  const auto n = static_cast<Eigen::Index>(model.lindblads.size());
  if (u.rows() != n || u.cols() != n) throw ValidationError("rotate_lindblad: U must be N x N");
  if (!hilbert::is_unitary(u, 1e-10)) throw ValidationError("rotate_lindblad: U is not unitary");
  LindbladModel out = model;
  for (Eigen::Index i = 0; i < n; ++i) {
    Operator a = Operator::Zero(model.dim(), model.dim());
    for (Eigen::Index j = 0; j < n; ++j) a += u(i, j) * model.lindblads[static_cast<std::size_t>(j)];
    out.lindblads[static_cast<std::size_t>(i)] = std::move(a);
  }
  return out;
}

double qbm_coherent_width(const QBMParams& params) {
  return params.hbar / (2.0 * std::sqrt(params.m * params.kT));
}

QBMModel build_qbm(const QBMParams& params, const GridSpec& spec, bool caldeira_leggett) {
  if (!(params.m > 0.0)) throw ValidationError("mass must be positive", "model.m");
  if (!(params.kT > 0.0)) throw ValidationError("temperature must be positive", "model.kT");
  if (!(params.gamma > 0.0)) throw ValidationError("gamma must be positive", "model.gamma");
  if (!(params.hbar > 0.0)) throw ValidationError("hbar must be positive", "model.hbar");
  if (spec.n < 16) throw ValidationError("grid needs at least 16 points", "numerics.grid_n");

  PositionGrid grid(spec.n, spec.length, params.hbar);
  // The A eigenstates and the thermal momentum spread must fit on the grid.
  const double sigma = qbm_coherent_width(params);
  const double p_thermal = std::sqrt(2.0 * params.m * params.kT);
  if (grid.dx() > sigma || 0.5 * spec.length < 6.0 * sigma || grid.p_max() < 6.0 * p_thermal)
    throw ValidationError("grid does not resolve the thermal width", "numerics.grid_n");

  QBMModel q{LindbladModel{}, grid.position_operator(), grid.momentum_operator(), grid, params, 0.0, 0.0,
             caldeira_leggett};
  q.alpha = std::sqrt(4.0 * params.gamma * params.m * params.kT) / params.hbar;
  q.beta = std::sqrt(params.gamma / (4.0 * params.m * params.kT));

  RealVector kinetic = grid.momenta().array().square() / (2.0 * params.m);
  Operator h = grid.momentum_function(kinetic);
  for (int j = 0; j < spec.n; ++j) h(j, j) += params.potential.value(grid.x(j));
  h += 0.5 * params.gamma * (q.x * q.p + q.p * q.x);
  q.model.H = 0.5 * (h + h.adjoint());
  q.model.hbar = params.hbar;
  q.model.lindblads.push_back(q.alpha * q.x + I * q.beta * q.p);
  if (caldeira_leggett) q.model.subtracted.push_back(q.beta * q.p);
  return q;
}

namespace {

std::vector<double> five_point(const std::vector<double>& f, double h) {
  std::vector<double> d;
  for (std::size_t i = 2; i + 2 < f.size(); ++i)
    d.push_back((f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h));
  return d;
}

}  // namespace

MomentCheck unconditioned_moments(const MasterRun& run, const QBMModel& qbm) {
  const std::size_t n = run.states.size();
  if (n < 5) throw ValidationError("moment check needs at least five recorded states");
  const double h = run.times[1] - run.times[0];
  for (std::size_t i = 1; i < n - 1; ++i)
    if (std::abs(run.times[i] - run.times[i - 1] - h) > 1e-9 * h)
      throw ValidationError("moment check needs a uniformly sampled series");

  RealVector vprime(qbm.grid.size());
  for (int j = 0; j < qbm.grid.size(); ++j) vprime(j) = qbm.params.potential.gradient(qbm.grid.x(j));

  std::vector<double> ex, ep, force;
  for (const auto& rho : run.states) {
    ex.push_back((qbm.x * rho).trace().real());
    ep.push_back((qbm.p * rho).trace().real());
    force.push_back(-(rho.diagonal().real().array() * vprime.array()).sum());
  }
  MomentCheck out;
  out.dx_dt_fd = five_point(ex, h);
  out.dp_dt_fd = five_point(ep, h);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    out.times.push_back(run.times[i]);
    out.dx_dt_pred.push_back(ep[i] / qbm.params.m);
    out.dp_dt_pred.push_back(force[i] - 2.0 * qbm.params.gamma * ep[i]);
  }
  auto rel = [](const std::vector<double>& fd, const std::vector<double>& pred) {
    double scale = 0.0;
    for (double v : pred) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) scale = 1.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, std::abs(fd[i] - pred[i]) / scale);
    return worst;
  };
  out.max_rel_err_x = rel(out.dx_dt_fd, out.dx_dt_pred);
  out.max_rel_err_p = rel(out.dp_dt_fd, out.dp_dt_pred);
  return out;
}

}  // namespace qunravel

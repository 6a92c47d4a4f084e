#include "qunravel/born_unravel.hpp"

#include <algorithm>
#include <cmath>

#include "qunravel/hilbert.hpp"

namespace qunravel::born {

namespace {

void require_unravelable(const LindbladModel& model, const Ket& psi) {
  if (!model.is_lindblad_form())
    throw ValidationError("unravelling needs a master equation of Lindblad form (no subtracted terms)");
  if (psi.size() != model.dim()) throw ValidationError("state dimension does not match the model");
  if (std::abs(psi.norm() - 1.0) > 1e-6) throw ValidationError("state must be normalized");
}

// Total rate sum_i ||(A_i - <A_i>) ψ||^2 for a normalized ψ.
double total_rate(const LindbladModel& model, const Ket& psi) {
  double r = 0.0;
  for (const auto& a : model.lindblads) {
    const Ket ap = a * psi;
    const cplx mu = psi.dot(ap);
    r += (ap - mu * psi).squaredNorm();
  }
  return r;
}

// dψ/dt for the deterministic part, means taken from the normalized φ.
Ket drift(const LindbladModel& model, const Ket& phi) {
  const double n2 = phi.squaredNorm();
  Ket out = model.H * phi;
  double rate = 0.0;
  for (const auto& a : model.lindblads) {
    const Ket ap = a * phi;
    const cplx mu = phi.dot(ap) / n2;
    const Ket v = ap - mu * phi;
    rate += v.squaredNorm() / n2;
    // (i hbar/2)[mu^* v - A^dag(Aφ) + mu^* Aφ]
    const Ket adag_ap = a.adjoint() * ap;
    out += (0.5 * I * model.hbar) * (std::conj(mu) * v - adag_ap + std::conj(mu) * ap);
  }
  return out / (I * model.hbar) + 0.5 * rate * phi;
}

}  // namespace

std::vector<cplx> lindblad_means(const LindbladModel& model, const Ket& psi) {
  std::vector<cplx> mu;
  mu.reserve(model.lindblads.size());
  const double n2 = psi.squaredNorm();
  for (const auto& a : model.lindblads) mu.push_back(psi.dot(a * psi) / n2);
  return mu;
}

BranchSet branch_set(const LindbladModel& model, const Ket& psi) {
  require_unravelable(model, psi);
  const auto n = static_cast<int>(model.lindblads.size());
  BranchSet bs;
  bs.mean_a = lindblad_means(model, psi);
  bs.u = Operator::Identity(n, n);
  bs.gram_eigenvalues = RealVector::Zero(n);
  if (n == 0) return bs;

  std::vector<Ket> v;
  v.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v.push_back(model.lindblads[static_cast<std::size_t>(i)] * psi - bs.mean_a[static_cast<std::size_t>(i)] * psi);
  Operator gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gram(i, j) = v[static_cast<std::size_t>(i)].dot(v[static_cast<std::size_t>(j)]);
  gram = 0.5 * (gram + gram.adjoint()).eval();
  bs.total_rate = gram.trace().real();

  Eigen::SelfAdjointEigenSolver<Operator> solver(gram);
  // Columns in descending eigenvalue order; ties broken by the index of the
  // dominant contributing Lindblad operator.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = n - 1 - k;
  auto dominant = [&](int col) {
    Eigen::Index idx = 0;
    solver.eigenvectors().col(col).cwiseAbs().maxCoeff(&idx);
    return static_cast<int>(idx);
  };
  const double scale = std::max(bs.total_rate, kAbsoluteRateCutoff);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = solver.eigenvalues()(a), rb = solver.eigenvalues()(b);
    if (std::abs(ra - rb) > 1e-8 * scale) return ra > rb;
    return dominant(a) < dominant(b);
  });

  const double cutoff = std::max(kRelativeRateCutoff * bs.total_rate, kAbsoluteRateCutoff);
  for (int k = 0; k < n; ++k) {
    const int col = order[static_cast<std::size_t>(k)];
    const double r = std::max(0.0, solver.eigenvalues()(col));
    bs.gram_eigenvalues(k) = r;
    Eigen::VectorXcd row = solver.eigenvectors().col(col);  // U_ki = W_ik
    Ket image = Ket::Zero(psi.size());
    for (int i = 0; i < n; ++i) image += row(i) * v[static_cast<std::size_t>(i)];
    const cplx phase = hilbert::fix_phase_largest(image);
    bs.u.row(k) = (phase * row).transpose();
    if (r >= cutoff) {
      if (!bs.rates.empty() && std::abs(bs.rates.back() - r) <= 1e-8 * scale) bs.generic = false;
      bs.images.push_back(std::move(image));
      bs.rates.push_back(r);
    }
  }
  return bs;
}

EffectiveHamiltonian effective_hamiltonian(const LindbladModel& model, const Ket& psi, const BranchSet& bs) {
  require_unravelable(model, psi);
  const auto d = model.dim();
  const Operator id = Operator::Identity(d, d);
  Operator k = model.H;
  const auto n = static_cast<Eigen::Index>(model.lindblads.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    Operator b = Operator::Zero(d, d);
    cplx mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      b += bs.u(r, i) * model.lindblads[static_cast<std::size_t>(i)];
      mean += bs.u(r, i) * bs.mean_a[static_cast<std::size_t>(i)];
    }
    const Operator j = b - mean * id;
    k += (0.5 * I * model.hbar) * (std::conj(mean) * j - mean * j.adjoint() - j.adjoint() * j);
  }
  return {0.5 * (k + k.adjoint()), 0.5 * (k - k.adjoint())};
}

Ket apply_effective_hamiltonian(const LindbladModel& model, const std::vector<cplx>& mean_a, const Ket& phi) {
  if (mean_a.size() != model.lindblads.size()) throw ValidationError("one mean per Lindblad operator is required");
  Ket out = model.H * phi;
  for (std::size_t i = 0; i < mean_a.size(); ++i) {
    const Operator& a = model.lindblads[i];
    const cplx mu = mean_a[i];
    const Ket ap = a * phi;
    const Ket v = ap - mu * phi;
    const Ket adag_v = a.adjoint() * v - std::conj(mu) * v;
    const Ket adag_phi = a.adjoint() * phi - std::conj(mu) * phi;
    out += (0.5 * I * model.hbar) * (std::conj(mu) * v - mu * adag_phi - adag_v);
  }
  return out;
}

Ket deterministic_step(const LindbladModel& model, const Ket& psi, double dt) {
  const Ket k1 = drift(model, psi);
  const Ket k2 = drift(model, psi + dt * k1);
  Ket out = psi + (0.5 * dt) * (k1 + k2);
  out.normalize();
  return out;
}

StepResult pdp_step(const LindbladModel& model, const Ket& psi, double dt, SplitMix64& rng) {
  const BranchSet bs = branch_set(model, psi);
  double total = 0.0;
  for (double r : bs.rates) total += r;
  StepResult res;
  res.step_warning = total * dt > 0.1;
  const double u = rng.uniform();
  double acc = 0.0;
  for (int k = 0; k < bs.kept(); ++k) {
    acc += bs.rates[static_cast<std::size_t>(k)] * dt;
    if (u < acc) {
      res.psi = bs.images[static_cast<std::size_t>(k)].normalized();
      res.branch = k;
      return res;
    }
  }
  res.psi = deterministic_step(model, psi, dt);
  return res;
}

StepResult qsd_step(const LindbladModel& model, const Ket& psi, double dt, SplitMix64& rng) {
  const BranchSet bs = branch_set(model, psi);
  double total = 0.0;
  for (double r : bs.rates) total += r;
  StepResult res;
  res.step_warning = total * dt > 0.1;
  Ket noise = Ket::Zero(psi.size());
  const double sdt = std::sqrt(dt);
  for (int k = 0; k < bs.kept(); ++k) noise += (sdt * rng.normal()) * bs.images[static_cast<std::size_t>(k)];
  const Ket k1 = drift(model, psi);
  const Ket k2 = drift(model, psi + dt * k1);
  res.psi = psi + (0.5 * dt) * (k1 + k2) + noise;
  res.psi.normalize();
  return res;
}

double ConditionedIncrement::deterministic_rate() const {
  double d = drift;
  for (std::size_t k = 0; k < rates.size(); ++k) d -= rates[k] * jump_terms[k];
  return d;
}

double ConditionedIncrement::mean_increment(double dt) const {
  double inc = deterministic_rate() * dt;
  for (std::size_t k = 0; k < rates.size(); ++k) inc += rates[k] * dt * jump_terms[k];
  return inc;
}

ConditionedIncrement conditioned_increment(const LindbladModel& model, const Ket& psi, const Operator& o,
                                           const BranchSet& bs) {
  require_unravelable(model, psi);
  if (!hilbert::is_hermitian(o, 1e-10)) throw ValidationError("observable must be Hermitian");
  ConditionedIncrement out;
  const DensityMatrix rho = psi * psi.adjoint();
  out.drift = (o * liouvillian_apply(model, rho)).trace().real();
  const double mean_o = psi.dot(o * psi).real();
  for (int k = 0; k < bs.kept(); ++k) {
    const Ket& j = bs.images[static_cast<std::size_t>(k)];
    const double r = bs.rates[static_cast<std::size_t>(k)];
    out.rates.push_back(r);
    out.jump_terms.push_back((j.dot(o * j).real() - mean_o * j.squaredNorm()) / r);
  }
  return out;
}

std::vector<JumpDisplacement> jump_displacement_stats(const Ket& psi, const BranchSet& bs, const Operator& x,
                                                      const Operator& p) {
  if (bs.kept() == 0) throw ValidationError("jump displacement is undefined without a branch of positive rate");
  const double mx = psi.dot(x * psi).real();
  const double mp = psi.dot(p * psi).real();
  std::vector<JumpDisplacement> out;
  for (int k = 0; k < bs.kept(); ++k) {
    const Ket& j = bs.images[static_cast<std::size_t>(k)];
    const double r = j.squaredNorm();
    out.push_back({bs.rates[static_cast<std::size_t>(k)], j.dot(x * j).real() / r - mx, j.dot(p * j).real() / r - mp});
  }
  return out;
}

namespace {

struct Moments {
  double ex = 0.0, ep = 0.0, var_x = 0.0, var_p = 0.0;
};

Moments moments_of(const Ket& psi, const Observables& obs) {
  const Ket xp = obs.x * psi;
  const Ket pp = obs.p * psi;
  Moments m;
  m.ex = psi.dot(xp).real();
  m.ep = psi.dot(pp).real();
  m.var_x = std::max(0.0, xp.squaredNorm() - m.ex * m.ex);
  m.var_p = std::max(0.0, pp.squaredNorm() - m.ep * m.ep);
  return m;
}

}  // namespace

TrajectoryRecord run_trajectory(const LindbladModel& model, const Ket& psi0, Scheme scheme,
                                const TrajectoryOptions& options, SplitMix64& rng, const Observables* obs,
                                const RecordCallback& on_record) {
  require_unravelable(model, psi0);
  if (!(options.dt > 0.0)) throw ValidationError("dt must be positive", "numerics.dt");
  if (options.n_steps < 0) throw ValidationError("number of steps must be nonnegative");
  if (options.record_every < 1) throw ValidationError("record_every must be at least 1");
  if (!(options.max_rate_dt > 0.0)) throw ValidationError("max_rate_dt must be positive");

  TrajectoryRecord rec;
  Ket psi = psi0.normalized();
  long jumps = 0;
  bool jumped = false;
  int last_branch = -1;

  auto write_row = [&](long step) {
    TrajectoryRow row;
    row.step = step;
    row.t = step * options.dt;
    row.jumped = jumped;
    row.branch_index = last_branch;
    row.n_jumps_cum = jumps;
    if (obs != nullptr) {
      const Moments m = moments_of(psi, *obs);
      row.ex = m.ex;
      row.ep = m.ep;
      row.var_x = m.var_x;
      row.var_p = m.var_p;
    }
    rec.max_norm_error = std::max(rec.max_norm_error, std::abs(psi.norm() - 1.0));
    if (on_record) on_record(rec.rows.size(), psi);
    rec.rows.push_back(row);
    jumped = false;
    last_branch = -1;
  };

  write_row(0);
  for (long s = 1; s <= options.n_steps; ++s) {
    const double t0 = (s - 1) * options.dt;
    if (scheme == Scheme::born && !options.allow_jumps) {
      psi = deterministic_step(model, psi, options.dt);
    } else {
      const double rate = total_rate(model, psi);
      const long n_sub = std::max(1L, static_cast<long>(std::ceil(rate * options.dt / options.max_rate_dt)));
      const double h = options.dt / static_cast<double>(n_sub);
      for (long k = 0; k < n_sub; ++k) {
        StepResult res;
        if (scheme == Scheme::born) {
          res = pdp_step(model, psi, h, rng);
          if (res.branch) {
            ++jumps;
            jumped = true;
            last_branch = *res.branch;
            rec.jumps.push_back({t0 + (k + 1) * h, *res.branch});
            if (obs != nullptr) {
              const Moments before = moments_of(psi, *obs);
              const Moments after = moments_of(res.psi, *obs);
              rec.jump_sq_dx += std::pow(after.ex - before.ex, 2);
              rec.jump_sq_dp += std::pow(after.ep - before.ep, 2);
            }
          }
        } else {
          res = qsd_step(model, psi, h, rng);
        }
        rec.step_warning = rec.step_warning || res.step_warning;
        psi = std::move(res.psi);
      }
    }
    if (s % options.record_every == 0) write_row(s);
  }
  rec.final_state = psi;
  return rec;
}

}  // namespace qunravel::born

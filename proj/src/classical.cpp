#include "qunravel/classical.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

namespace qunravel::classical {

namespace {

struct Neumaier {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double harmonic_k(const LangevinParams& params) {
  switch (params.potential.kind) {
    case PotentialSpec::Kind::free: return 0.0;
    case PotentialSpec::Kind::harmonic: return params.potential.k;
    default: throw ValidationError("closed moment equations need a free or harmonic potential", "model.potential.name");
  }
}

struct MomentPrediction {
  double mean_p = 0.0, var_p = 0.0;
};

// Exact solution of the closed first- and second-moment equations over dt.
MomentPrediction propagate_moments(const EnsembleMoments& m0, const LangevinParams& prm, double k, double dt) {
  const double g2 = 2.0 * prm.gamma;
  Eigen::Matrix3d a;
  a << 0.0, 1.0 / prm.m, 0.0,  //
      -k, -g2, 0.0,             //
      0.0, 0.0, 0.0;
  const Eigen::Vector3d first = (a * dt).exp() * Eigen::Vector3d(m0.mean_x, m0.mean_p, 1.0);
  Eigen::Matrix4d b;
  b << 0.0, 2.0 / prm.m, 0.0, prm.x_noise,  //
      -k, -g2, 1.0 / prm.m, 0.0,             //
      0.0, -2.0 * k, -2.0 * g2, 4.0 * prm.gamma * prm.m * prm.kT,  //
      0.0, 0.0, 0.0, 0.0;
  const Eigen::Vector4d second = (b * dt).exp() * Eigen::Vector4d(m0.var_x, m0.cov_xp, m0.var_p, 1.0);
  return {first(1), second(2)};
}

void step_point(PhasePoint& pt, SplitMix64& rng, const LangevinParams& prm) {
  const double dt = prm.dt;
  const double kick = prm.noise_amplitude() * std::sqrt(dt);
  if (prm.integrator == Integrator::leapfrog) {
    double p = pt.p - 0.5 * dt * prm.potential.gradient(pt.q);
    pt.q += dt * p / prm.m;
    p -= 0.5 * dt * prm.potential.gradient(pt.q);
    pt.p = p - 2.0 * prm.gamma * p * dt;
  } else {
    const double force = -prm.potential.gradient(pt.q) - 2.0 * prm.gamma * pt.p;
    pt.q += dt * pt.p / prm.m;
    pt.p += dt * force;
  }
  if (kick > 0.0) pt.p += kick * rng.normal();
  if (prm.x_noise > 0.0) pt.q += std::sqrt(prm.x_noise * dt) * rng.normal();
}

}  // namespace

double LangevinParams::noise_amplitude() const { return std::sqrt(4.0 * gamma * m * kT); }

void LangevinParams::validate() const {
  if (!(m > 0.0)) throw ValidationError("mass must be positive", "model.m");
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be nonnegative", "model.gamma");
  if (!(kT >= 0.0)) throw ValidationError("temperature must be nonnegative", "model.kT");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive", "numerics.dt");
  if (!(x_noise >= 0.0)) throw ValidationError("position noise must be nonnegative", "model.x_noise");
}

ClassicalEnsemble ClassicalEnsemble::gaussian(std::size_t n, PhasePoint mean, double sd_x, double sd_p,
                                              std::uint64_t seed) {
  ClassicalEnsemble e;
  e.points.reserve(n);
  e.rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng = stream(seed, i);
    const double x = mean.q + sd_x * rng.normal();
    const double p = mean.p + sd_p * rng.normal();
    e.points.push_back({x, p});
    e.rngs.push_back(rng);
  }
  return e;
}

bool langevin_step(ClassicalEnsemble& ensemble, const LangevinParams& params) {
  return langevin_evolve(ensemble, params, 1, 1);
}

bool langevin_evolve(ClassicalEnsemble& ensemble, const LangevinParams& params, long n_steps, int threads) {
  params.validate();
  if (ensemble.rngs.size() != ensemble.points.size()) throw ValidationError("ensemble needs one stream per point");
  const std::size_t n = ensemble.size();
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      for (long s = 0; s < n_steps; ++s) step_point(ensemble.points[i], ensemble.rngs[i], params);
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, std::min(n, w * chunk), std::min(n, (w + 1) * chunk));
    for (auto& t : pool) t.join();
  }
  return params.dt * params.gamma > 0.05;
}

EnsembleMoments ensemble_moments(const ClassicalEnsemble& ensemble) {
  EnsembleMoments m;
  m.n = ensemble.size();
  if (m.n < 2) throw ValidationError("moments need at least two points");
  Neumaier sx, sp;
  for (const auto& pt : ensemble.points) {
    sx.add(pt.q);
    sp.add(pt.p);
  }
  const double n = static_cast<double>(m.n);
  m.mean_x = sx.value() / n;
  m.mean_p = sp.value() / n;
  Neumaier vx, vp, cxp, p2, p4, d4;
  for (const auto& pt : ensemble.points) {
    const double dx = pt.q - m.mean_x, dp = pt.p - m.mean_p;
    vx.add(dx * dx);
    vp.add(dp * dp);
    cxp.add(dx * dp);
    p2.add(pt.p * pt.p);
    p4.add(std::pow(pt.p, 4));
    d4.add(std::pow(dp, 4));
  }
  m.var_x = vx.value() / (n - 1.0);
  m.var_p = vp.value() / (n - 1.0);
  m.cov_xp = cxp.value() / (n - 1.0);
  m.mean_p2 = p2.value() / n;
  m.se_mean_p = std::sqrt(m.var_p / n);
  m.se_var_p = std::sqrt(std::max(0.0, d4.value() / n - m.var_p * m.var_p) / n);
  m.se_mean_p2 = std::sqrt(std::max(0.0, p4.value() / n - m.mean_p2 * m.mean_p2) / n);
  return m;
}

FokkerPlanckReport fokker_planck_moment_check(const std::vector<ClassicalEnsemble>& snapshots,
                                              const std::vector<double>& times, const LangevinParams& params) {
  const double k = harmonic_k(params);
  if (snapshots.size() != times.size() || snapshots.size() < 2)
    throw ValidationError("need at least two snapshots with matching times");
  FokkerPlanckReport rep;
  rep.passes = true;
  for (std::size_t s = 0; s + 1 < snapshots.size(); ++s) {
    const auto& a = snapshots[s];
    const auto& b = snapshots[s + 1];
    if (a.size() != b.size()) throw ValidationError("snapshots must hold the same points");
    const double dt = times[s + 1] - times[s];
    if (!(dt > 0.0)) throw ValidationError("snapshot times must increase");
    const EnsembleMoments ma = ensemble_moments(a), mb = ensemble_moments(b);
    const double n = static_cast<double>(a.size());

    // Per-point increments of p and of the centered p^2.
    Neumaier s1, s2, q1, q2;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double u = b.points[i].p - a.points[i].p;
      const double v = std::pow(b.points[i].p - mb.mean_p, 2) - std::pow(a.points[i].p - ma.mean_p, 2);
      s1.add(u);
      q1.add(u * u);
      s2.add(v);
      q2.add(v * v);
    }
    auto se = [n](const Neumaier& s, const Neumaier& q) {
      const double mean = s.value() / n;
      return std::sqrt(std::max(0.0, q.value() / n - mean * mean) / (n - 1.0));
    };
    MomentRateCheck c;
    c.t = 0.5 * (times[s] + times[s + 1]);
    c.dp_dt = (mb.mean_p - ma.mean_p) / dt;
    c.dp_dt_se = se(s1, q1) / dt;
    c.dvar_dt = (mb.var_p - ma.var_p) / dt;
    c.dvar_dt_se = se(s2, q2) / dt;
    const MomentPrediction pred = propagate_moments(ma, params, k, dt);
    c.dp_dt_pred = (pred.mean_p - ma.mean_p) / dt;
    c.dvar_dt_pred = (pred.var_p - ma.var_p) / dt;
    for (double z : {(c.dp_dt - c.dp_dt_pred) / std::max(c.dp_dt_se, 1e-300),
                     (c.dvar_dt - c.dvar_dt_pred) / std::max(c.dvar_dt_se, 1e-300)}) {
      rep.max_z = std::max(rep.max_z, std::abs(z));
      if (std::abs(z) > 3.0) rep.passes = false;
    }
    rep.intervals.push_back(c);
  }
  return rep;
}

EquipartitionReport equipartition_check(const ClassicalEnsemble& ensemble, const LangevinParams& params) {
  if (!(params.kT > 0.0)) throw ValidationError("equipartition needs a positive temperature", "model.kT");
  const EnsembleMoments m = ensemble_moments(ensemble);
  EquipartitionReport r;
  r.kinetic_ratio = m.mean_p2 / (params.m * params.kT);
  if (params.potential.kind == PotentialSpec::Kind::harmonic) r.potential_ratio = params.potential.k * m.var_x / params.kT;
  return r;
}

DiffusionFit diffusion_fit(const std::vector<double>& times, const std::vector<double>& variance, double gamma) {
  if (times.size() != variance.size() || times.size() < 3) throw ValidationError("diffusion fit needs >= 3 points");
  // Basis functions e(t) = e^{-4γt}, g(t) = (1 - e)/(4γ) (g = t when γ = 0).
  double see = 0, seg = 0, sgg = 0, sev = 0, sgv = 0;
  std::vector<double> e(times.size()), g(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    e[i] = std::exp(-4.0 * gamma * times[i]);
    g[i] = gamma > 0.0 ? (1.0 - e[i]) / (4.0 * gamma) : times[i];
    see += e[i] * e[i];
    seg += e[i] * g[i];
    sgg += g[i] * g[i];
    sev += e[i] * variance[i];
    sgv += g[i] * variance[i];
  }
  const double det = see * sgg - seg * seg;
  if (!(std::abs(det) > 0.0)) throw ValidationError("diffusion fit is degenerate");
  DiffusionFit fit;
  fit.v0 = (sgg * sev - seg * sgv) / det;
  fit.diffusion = (see * sgv - seg * sev) / det;
  double rss = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) rss += std::pow(variance[i] - fit.v0 * e[i] - fit.diffusion * g[i], 2);
  const double sigma2 = rss / static_cast<double>(times.size() - 2);
  fit.std_error = std::sqrt(sigma2 * see / det);
  return fit;
}

BridgeReport moment_bridge(const MomentSeries& quantum, const MomentSeries& classical, double gamma,
                           double tolerance) {
  if (quantum.times.size() != classical.times.size()) throw ValidationError("bridge: output times differ");
  for (std::size_t i = 0; i < quantum.times.size(); ++i)
    if (std::abs(quantum.times[i] - classical.times[i]) > 1e-9 * std::max(1.0, std::abs(quantum.times[i])))
      throw ValidationError("bridge: output times differ");
  if (quantum.var_p.size() != quantum.times.size() || classical.var_p.size() != classical.times.size())
    throw ValidationError("bridge: series lengths differ");
  BridgeReport rep;
  rep.tolerance = tolerance;
  rep.times = quantum.times;
  for (std::size_t i = 0; i < quantum.times.size(); ++i) {
    const double d = quantum.var_p[i] - classical.var_p[i];
    // Gaussian standard error of a sample variance: V sqrt(2/(n-1)).
    auto se = [](double v, std::size_t n) { return n > 1 ? v * std::sqrt(2.0 / static_cast<double>(n - 1)) : 0.0; };
    const double s = std::hypot(se(quantum.var_p[i], quantum.samples), se(classical.var_p[i], classical.samples));
    rep.var_diff.push_back(d);
    rep.z.push_back(s > 0.0 ? d / s : 0.0);
  }
  rep.quantum = diffusion_fit(quantum.times, quantum.var_p, gamma);
  rep.classical = diffusion_fit(classical.times, classical.var_p, gamma);
  rep.slope_rel_diff = std::abs(rep.quantum.diffusion - rep.classical.diffusion) / std::abs(rep.classical.diffusion);
  rep.passes = rep.slope_rel_diff <= tolerance;
  return rep;
}

}  // namespace qunravel::classical

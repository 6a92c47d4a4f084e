#include "qunravel/models.hpp"

#include <cmath>
#include <numbers>

#include "qunravel/rng.hpp"

namespace qunravel {

PotentialSpec PotentialSpec::harmonic(double mass, double omega) {
  PotentialSpec s;
  s.kind = Kind::harmonic;
  s.k = mass * omega * omega;
  return s;
}

PotentialSpec PotentialSpec::double_well(double a, double b) {
  PotentialSpec s;
  s.kind = Kind::double_well;
  s.a = a;
  s.b = b;
  return s;
}

PotentialSpec PotentialSpec::cosine(double v0, double q) {
  PotentialSpec s;
  s.kind = Kind::cosine;
  s.v0 = v0;
  s.q = q;
  return s;
}

double PotentialSpec::value(double x) const {
  switch (kind) {
    case Kind::free: return 0.0;
    case Kind::harmonic: return 0.5 * k * x * x;
    case Kind::double_well: return a * std::pow(x * x - b * b, 2);
    case Kind::cosine: return v0 * std::cos(q * x);
  }
  return 0.0;
}

double PotentialSpec::gradient(double x) const {
  switch (kind) {
    case Kind::free: return 0.0;
    case Kind::harmonic: return k * x;
    case Kind::double_well: return 4.0 * a * x * (x * x - b * b);
    case Kind::cosine: return -v0 * q * std::sin(q * x);
  }
  return 0.0;
}

std::string PotentialSpec::name() const {
  switch (kind) {
    case Kind::free: return "free";
    case Kind::harmonic: return "harmonic";
    case Kind::double_well: return "double_well";
    case Kind::cosine: return "cosine";
  }
  return "free";
}

PotentialSpec::Kind PotentialSpec::parse_kind(const std::string& name) {
  if (name == "free") return Kind::free;
  if (name == "harmonic") return Kind::harmonic;
  if (name == "double_well") return Kind::double_well;
  if (name == "cosine") return Kind::cosine;
  throw ValidationError("unknown potential '" + name + "'", "model.potential.name");
}

}  // namespace qunravel

namespace qunravel::models {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void KickedRotorParams::validate() const {
  if (dim < 65 || dim % 2 == 0) throw ValidationError("rotor dimension must be odd and at least 65", "model.dim");
  if (!(inertia > 0.0)) throw ValidationError("inertia must be positive", "model.inertia");
  if (!(hbar > 0.0)) throw ValidationError("hbar must be positive", "model.hbar");
  if (!(period > 0.0)) throw ValidationError("kick period must be positive", "model.period");
  if (!std::isfinite(kick)) throw ValidationError("kick strength must be finite", "model.kick");
}

Operator rotor_floquet(const KickedRotorParams& params) {
  params.validate();
  const int n = params.dim;
  const int mm = params.m_max();
  // <θ_j|m> = e^{i m θ_j}/sqrt(n) on the angle grid θ_j = 2πj/n.
  Operator f(n, n);
  for (int j = 0; j < n; ++j) {
    const double theta = kTwoPi * j / n;
    for (int k = 0; k < n; ++k) f(j, k) = std::exp(I * (static_cast<double>(k - mm) * theta)) / std::sqrt(double(n));
  }
  Eigen::VectorXcd kick(n), free(n);
  for (int j = 0; j < n; ++j) kick(j) = std::exp(-I * (params.kick * std::cos(kTwoPi * j / n) / params.hbar));
  for (int k = 0; k < n; ++k) {
    const double m = k - mm;
    free(k) = std::exp(-I * (params.hbar * m * m * params.period / (2.0 * params.inertia)));
  }
  const Operator kick_m = f.adjoint() * kick.asDiagonal() * f;
  return free.asDiagonal() * kick_m;
}

double rotor_edge_population(const Ket& psi, int margin) {
  const auto n = psi.size();
  double pop = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (k < margin || k >= n - margin) pop += std::norm(psi(k));
  return pop;
}

double wrap_angle(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

void StandardMap::forward(PhasePoint& x) const {
  x.p += kick * std::sin(x.q);
  x.q = wrap_angle(x.q + x.p * period / inertia);
}

void StandardMap::inverse(PhasePoint& x) const {
  x.q = wrap_angle(x.q - x.p * period / inertia);
  x.p -= kick * std::sin(x.q);
}

void StandardMap::tangent(PhasePoint& x, Eigen::Vector2d& t) const {
  const double c = kick * std::cos(x.q);
  const double s = period / inertia;
  const double dp = t(1) + c * t(0);
  const double dq = t(0) + s * dp;
  t << dq, dp;
  forward(x);
}

std::vector<PhasePoint> classical_standard_map(std::vector<PhasePoint> points, double k_eff, int n_steps) {
  const StandardMap map{k_eff, 1.0, 1.0};
  for (auto& pt : points)
    for (int s = 0; s < n_steps; ++s) map.forward(pt);
  return points;
}

LyapunovResult lyapunov_estimate(const TangentStep& step, const std::vector<PhasePoint>& starts, int n_steps,
                                 int renorm_every, double step_size) {
  if (starts.empty() || n_steps < 1 || renorm_every < 1 || !(step_size > 0.0))
    throw ValidationError("lyapunov_estimate: need samples, steps and a positive step size");
  std::vector<double> rates;
  for (PhasePoint x : starts) {
    Eigen::Vector2d t(1.0, 0.0);
    double log_sum = 0.0;
    for (int s = 1; s <= n_steps; ++s) {
      step(x, t);
      if (s % renorm_every == 0 || s == n_steps) {
        const double len = t.norm();
        log_sum += std::log(len);
        t /= len;
      }
    }
    rates.push_back(log_sum / (n_steps * step_size));
  }
  LyapunovResult res;
  res.samples = static_cast<int>(rates.size());
  double mean = 0.0;
  for (double r : rates) mean += r;
  mean /= res.samples;
  double var = 0.0;
  for (double r : rates) var += (r - mean) * (r - mean);
  res.lambda = mean;
  res.std_error = res.samples > 1 ? std::sqrt(var / (res.samples - 1) / res.samples) : 0.0;
  return res;
}

LyapunovResult lyapunov_estimate(const StandardMap& map, int n_steps, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("lyapunov_estimate: need at least one sample");
  SplitMix64 rng = stream(seed, 0);
  std::vector<PhasePoint> starts;
  for (int i = 0; i < n_samples; ++i) starts.push_back({kTwoPi * rng.uniform(), kTwoPi * rng.uniform()});
  return lyapunov_estimate([&map](PhasePoint& x, Eigen::Vector2d& t) { map.tangent(x, t); }, starts, n_steps);
}

TangentStep harmonic_flow(double omega, double mass, double dt) {
  const double c = std::cos(omega * dt), s = std::sin(omega * dt);
  const double mw = mass * omega;
  return [=](PhasePoint& x, Eigen::Vector2d& t) {
    const double q = c * x.q + s * x.p / mw;
    const double p = -mw * s * x.q + c * x.p;
    x = {q, p};
    const double tq = c * t(0) + s * t(1) / mw;
    const double tp = -mw * s * t(0) + c * t(1);
    t << tq, tp;
  };
}

double ehrenfest_time(double lambda, double action, double hbar) {
  if (!(lambda > 0.0)) throw ValidationError("Lyapunov exponent must be positive", "lambda");
  if (!(hbar > 0.0)) throw ValidationError("hbar must be positive", "hbar");
  if (!(action > hbar)) throw ValidationError("action must exceed hbar", "action");
  return std::log(action / hbar) / lambda;
}

namespace {

double gamma_m_kT(const QBMParams& p) {
  if (!(p.gamma > 0.0) || !(p.m > 0.0) || !(p.kT > 0.0) || !(p.hbar > 0.0))
    throw ValidationError("scale formulas need positive gamma, m, kT and hbar");
  return p.gamma * p.m * p.kT;
}

}  // namespace

double localization_time(const QBMParams& params, double ell) {
  if (!(ell > 0.0)) throw ValidationError("length scale must be positive");
  return params.hbar * params.hbar / (gamma_m_kT(params) * ell * ell);
}

double jump_rate_estimate(const QBMParams& params, double ell) {
  if (!(ell > 0.0)) throw ValidationError("length scale must be positive");
  return gamma_m_kT(params) * ell * ell / (params.hbar * params.hbar);
}

LocalizationScales localization_scales(const QBMParams& params, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("Lyapunov exponent must be positive", "lambda");
  LocalizationScales s;
  s.ell = params.hbar * std::sqrt(lambda / gamma_m_kT(params));
  s.tau = localization_time(params, s.ell);
  s.r_est = jump_rate_estimate(params, s.ell);
  return s;
}

}  // namespace qunravel::models

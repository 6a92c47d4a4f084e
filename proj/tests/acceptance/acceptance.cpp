// Acceptance checks 1-9. Usage: acceptance [criterion ...]; no argument runs all.
// Prints one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qunravel/born_unravel.hpp"
#include "qunravel/classical.hpp"
#include "qunravel/config.hpp"
#include "qunravel/discrete_born.hpp"
#include "qunravel/hilbert.hpp"
#include "qunravel/lindblad.hpp"
#include "qunravel/models.hpp"
#include "qunravel/phase_space.hpp"
#include "qunravel/runner.hpp"

using namespace qunravel;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr int kInstances = 25;
constexpr double kKrausTol = 1e-12;
constexpr double kFixTol = 1e-12;
constexpr double kBranchTol = 1e-10;
constexpr double kHeffTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kGaugeTol = 1e-11;
constexpr double kTraceDistanceTol = 0.05;
constexpr double kModelSeconds = 120.0;
constexpr double kFrequencySigmas = 3.0;
constexpr double kLeafTol = 1e-9;
constexpr double kDecayTol = 1e-6;
constexpr double kMonotoneSlack = 1e-3;
constexpr double kWidthFactor = 2.0;
constexpr double kCoherentRateTol = 1e-10;
constexpr double kLocalizationSeconds = 120.0;
constexpr double kSlopeTol = 0.15;
constexpr double kEquipartitionTol = 0.05;
constexpr double kBridgeSeconds = 300.0;
constexpr double kRotorAgreeTol = 0.10;
constexpr double kLyapunovTol = 0.15;
constexpr double kRotorSeconds = 300.0;
constexpr double kHyperionYearsTol = 0.05;
constexpr double kScaleTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs(const Operator& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

cli::QuantumSetup setup_from(const json& model, const json& numerics = json::object()) {
  const cli::RunConfig cfg = cli::parse_config_json({{"experiment", "master"}, {"model", model}, {"numerics", numerics}});
  return cli::make_quantum_setup(cfg.model, cfg.numerics);
}

LindbladModel random_model(SplitMix64& rng, int d, int n) {
  LindbladModel m;
  m.H = hilbert::random_hermitian(d, rng);
  for (int i = 0; i < n; ++i) m.lindblads.push_back(hilbert::random_operator(d, rng) / std::sqrt(static_cast<double>(d)));
  return m;
}

// ---------------------------------------------------------------- 1

Outcome criterion1() {
  double kraus = 0, fix = 0, fix_channel = 0, branch = 0, heff = 0, trace = 0, gauge = 0;
  for (int i = 0; i < kInstances; ++i) {
    SplitMix64 rng = stream(101, static_cast<std::uint64_t>(i));
    const int dm = 2 + static_cast<int>(rng() % 3), de = 2 + static_cast<int>(rng() % 3);
    discrete::InteractionStep step{hilbert::random_unitary(dm * de, rng), de, hilbert::basis(de, 0)};
    const auto ks = discrete::kraus_from_interaction(step);
    kraus = std::max(kraus, max_abs(discrete::kraus_completeness(ks) - Operator::Identity(dm, dm)));

    const Ket m0 = hilbert::random_state(dm, rng);
    const auto fixed = discrete::orthogonality_fix(ks, m0);
    for (std::size_t a = 0; a < fixed.ops.size(); ++a)
      for (std::size_t b = 0; b < fixed.ops.size(); ++b) {
        const cplx g = (fixed.ops[b] * m0).dot(fixed.ops[a] * m0);
        fix = std::max(fix, std::abs(g - (a == b ? cplx(fixed.probs[a]) : cplx(0.0))));
      }
    const DensityMatrix rho = hilbert::random_density(dm, rng);
    fix_channel = std::max(fix_channel, max_abs(discrete::apply_channel(fixed, rho) - discrete::apply_channel(ks, rho)));

    const int d = 2 + static_cast<int>(rng() % 5), n = 1 + static_cast<int>(rng() % 3);
    const LindbladModel model = random_model(rng, d, n);
    const Ket psi = hilbert::random_state(d, rng);
    const auto bs = born::branch_set(model, psi);
    for (int a = 0; a < bs.kept(); ++a)
      for (int b = 0; b < bs.kept(); ++b) {
        const cplx g = bs.images[static_cast<std::size_t>(b)].dot(bs.images[static_cast<std::size_t>(a)]);
        const double expect = a == b ? bs.rates[static_cast<std::size_t>(a)] : 0.0;
        branch = std::max(branch, std::abs(g - expect) / std::max(1.0, bs.total_rate));
      }
    const auto eff = born::effective_hamiltonian(model, psi, bs);
    Operator jj = Operator::Zero(d, d);
    for (std::size_t k = 0; k < model.lindblads.size(); ++k) {
      const Operator c = model.lindblads[k] - bs.mean_a[k] * Operator::Identity(d, d);
      jj += c.adjoint() * c;
    }
    const Operator full = eff.full();
    heff = std::max(heff, max_abs(jj + (full - full.adjoint()) / (I * model.hbar)) / std::max(1.0, max_abs(jj)));

    const DensityMatrix sigma = hilbert::random_density(d, rng);
    trace = std::max(trace, std::abs(liouvillian_apply(model, sigma).trace()));
    std::vector<cplx> shift;
    for (int k = 0; k < n; ++k) shift.emplace_back(rng.normal(), rng.normal());
    const DensityMatrix ref = liouvillian_apply(model, sigma);
    const Operator u = hilbert::random_unitary(n, rng);
    gauge = std::max(gauge, max_abs(liouvillian_apply(shift_lindblad(model, shift), sigma) - ref) / max_abs(ref));
    gauge = std::max(gauge, max_abs(liouvillian_apply(rotate_lindblad(model, u), sigma) - ref) / max_abs(ref));
  }
  Outcome o;
  o.pass = kraus <= kKrausTol && fix <= kFixTol && fix_channel <= kFixTol && branch <= kBranchTol &&
           heff <= kHeffTol && trace <= kTraceTol && gauge <= kGaugeTol;
  o.detail = std::to_string(kInstances) + " instances; completeness " + fmt("%.1e", kraus) + ", fixing " +
             fmt("%.1e", std::max(fix, fix_channel)) + ", branch gram " + fmt("%.1e", branch) + ", H_eff " +
             fmt("%.1e", heff) + ", trace " + fmt("%.1e", trace) + ", gauge " + fmt("%.1e", gauge);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome criterion2() {
  struct Case {
    std::string name;
    json model;
    double gamma;
  };
  const std::vector<Case> cases = {
      {"damping", {{"type", "qubit_damping"}, {"gamma", 1.0}, {"omega", 1.0}}, 1.0},
      {"dephasing", {{"type", "qubit_dephasing"}, {"gamma", 1.0}, {"omega", 1.0}}, 1.0},
      {"random8", {{"type", "random"}, {"dim", 8}, {"n_lindblads", 2}, {"rate", 1.0}, {"model_seed", 3}}, 1.0},
  };
  Outcome o;
  for (const auto& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const cli::QuantumSetup q = setup_from(c.model);
    const double dt = 1e-3;
    const long steps = std::lround(2.0 / c.gamma / dt);
    MasterOptions mo;
    mo.record_every = 50;
    mo.check_positivity = false;
    const MasterRun master = integrate_master(q.model, hilbert::projector(q.psi0), dt, static_cast<int>(steps), mo);
    std::string line = " " + c.name + ":";
    for (born::Scheme scheme : {born::Scheme::born, born::Scheme::qsd}) {
      born::EnsembleOptions eo;
      eo.scheme = scheme;
      eo.n_traj = 2000;
      eo.trajectory.dt = dt;
      eo.trajectory.n_steps = steps;
      eo.trajectory.record_every = 50;
      eo.seed = 202;
      eo.threads = cli::threads_from_env();
      eo.keep_records = 0;
      const auto res = born::ensemble_run(q.model, q.psi0, eo);
      double worst = 0.0;
      for (std::size_t i = 0; i < res.rho.size(); ++i)
        worst = std::max(worst, hilbert::trace_distance(res.rho[i], master.states[i]));
      const bool ok = worst <= kTraceDistanceTol && res.rho.size() == master.states.size();
      o.pass = o.pass && ok;
      line += std::string(scheme == born::Scheme::born ? " born " : " qsd ") + fmt("%.4f", worst);
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs <= kModelSeconds;
    o.detail += line + fmt(" (%.0f s)", secs) + ";";
  }
  o.detail = "max trace distance vs master, 2000 trajectories each;" + o.detail;
  return o;
}

// ---------------------------------------------------------------- 3

/// Applies a two-factor unitary on (M, E_k) of the product M (x) E_1 (x) ... with qubit factors.
Ket apply_pair(const Ket& psi, int n_env, int k, const Operator& u) {
  const hilbert::CompositeSpace space(std::vector<int>(static_cast<std::size_t>(n_env + 1), 2));
  Ket out = Ket::Zero(psi.size());
  for (int f = 0; f < space.total_dim(); ++f) {
    const auto idx = space.multi_index(f);
    const int col = idx[0] * 2 + idx[static_cast<std::size_t>(k)];
    for (int row = 0; row < 4; ++row) {
      auto to = idx;
      to[0] = row / 2;
      to[static_cast<std::size_t>(k)] = row % 2;
      out(space.flat_index(to)) += u(row, col) * psi(f);
    }
  }
  return out;
}

Outcome criterion3() {
  const double c1 = 0.3;
  const Ket m0 = (Ket(2) << std::sqrt(c1), std::sqrt(1.0 - c1)).finished();
  Operator cnot = Operator::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
  const discrete::InteractionStep measure{cnot, 2, hilbert::basis(2, 0)};

  // Sampled frequency of the |0> outcome.
  const int n = 10000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    SplitMix64 rng = stream(303, static_cast<std::uint64_t>(i));
    const auto h = discrete::sample_history(m0, {measure}, rng);
    if (std::norm(h.state(0)) > 0.5) ++hits;
  }
  const double freq = static_cast<double>(hits) / n;
  const double sigma = std::sqrt(c1 * (1 - c1) / n);

  // Two steps: measurement, then a generic coupling. Exact branch-Schmidt weights
  // from the total state on M (x) E1 (x) E2.
  SplitMix64 rng = stream(304, 0);
  const discrete::InteractionStep generic{hilbert::random_unitary(4, rng), 2, hilbert::basis(2, 0)};
  const auto tt = discrete::run_ticker_tape(m0, {measure, generic}, 305);
  Ket total = hilbert::tensor(hilbert::tensor(m0, hilbert::basis(2, 0)), hilbert::basis(2, 0));
  const Ket after1 = apply_pair(total, 2, 1, cnot);
  const Ket after2 = apply_pair(after1, 2, 2, generic.unitary);
  const auto first = hilbert::schmidt_decompose(after1, hilbert::CompositeSpace({2, 4}));
  std::map<int, std::vector<double>> exact;
  for (std::size_t a = 0; a < first.terms.size(); ++a) {
    if (first.terms[a].coeff < 1e-12) continue;
    // E1 component of the Schmidt vector (E2 still in |0>).
    Ket f(2);
    f << first.terms[a].right(0), first.terms[a].right(2);
    f.normalize();
    Ket phi = Ket::Zero(4);
    for (int m = 0; m < 2; ++m)
      for (int e1 = 0; e1 < 2; ++e1)
        for (int e2 = 0; e2 < 2; ++e2) phi(m * 2 + e2) += std::conj(f(e1)) * after2(m * 4 + e1 * 2 + e2);
    for (const auto& t : hilbert::schmidt_decompose(phi, hilbert::CompositeSpace({2, 2})).terms)
      if (t.coeff * t.coeff > 1e-14) exact[static_cast<int>(a)].push_back(t.coeff * t.coeff);
  }
  std::map<int, std::vector<double>> leaves;
  double leaf_sum = 0.0;
  for (int id : tt.tree.leaves()) {
    const auto& node = tt.tree.nodes[static_cast<std::size_t>(id)];
    leaves[node.label[0]].push_back(node.prob);
    leaf_sum += node.prob;
  }
  double leaf_err = std::abs(leaf_sum - 1.0);
  bool shape = leaves.size() == exact.size();
  for (auto& [a, probs] : leaves) {
    std::sort(probs.rbegin(), probs.rend());
    const auto& ex = exact[a];
    if (ex.size() != probs.size()) {
      shape = false;
      continue;
    }
    for (std::size_t i = 0; i < probs.size(); ++i) leaf_err = std::max(leaf_err, std::abs(probs[i] - ex[i]));
  }
  const DensityMatrix reduced = hilbert::reduced_state(after2, hilbert::CompositeSpace({2, 4}), 0);
  leaf_err = std::max(leaf_err, hilbert::trace_distance(tt.tree.unconditioned(2), reduced));

  Outcome o;
  o.pass = std::abs(freq - c1) <= kFrequencySigmas * sigma && shape && leaf_err <= kLeafTol;
  o.detail = "frequency " + fmt("%.4f", freq) + " vs 0.3 (3 sigma = " + fmt("%.4f", kFrequencySigmas * sigma) +
             "); leaf probabilities vs branch-Schmidt weights " + fmt("%.1e", leaf_err) + (shape ? "" : " (shape mismatch)");
  return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
  const double gamma = 0.8, dt = 1e-3;
  const int steps = static_cast<int>(std::lround(1.0 / gamma / dt));
  MasterOptions mo;
  mo.record_every = steps;
  LindbladModel deph;
  deph.H = Operator::Zero(2, 2);
  deph.lindblads = {std::sqrt(gamma) * hilbert::sigma_z()};
  const Ket plus = Ket::Ones(2) / std::sqrt(2.0);
  const auto rd = integrate_master(deph, hilbert::projector(plus), dt, steps, mo);
  const double t = rd.times.back();
  const double err_deph = std::abs(rd.states.back()(0, 1) - 0.5 * std::exp(-2.0 * gamma * t));

  LindbladModel damp;
  damp.H = Operator::Zero(2, 2);
  damp.lindblads = {std::sqrt(gamma) * hilbert::sigma_minus()};
  const auto ra = integrate_master(damp, hilbert::projector(hilbert::basis(2, 0)), dt, steps, mo);
  const double err_damp = std::abs(ra.states.back()(0, 0).real() - std::exp(-gamma * t));

  Outcome o;
  o.pass = err_deph <= kDecayTol && err_damp <= kDecayTol && std::abs(gamma * t - 1.0) < 1e-12;
  o.detail = "gamma t = 1, dt = 1e-3: |rho01 - e^{-2 gamma t}/2| = " + fmt("%.1e", err_deph) +
             ", |rho_ee - e^{-gamma t}| = " + fmt("%.1e", err_damp);
  return o;
}

// ---------------------------------------------------------------- 5

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  QBMParams qp;
  qp.m = 1.0;
  qp.kT = 0.25;
  qp.gamma = 1.0;
  qp.hbar = 1.0;
  const QBMModel qbm = build_qbm(qp, {256, 120.0});
  const double ell = models::localization_scales(qp, qp.gamma).ell;  // hbar / sqrt(m kT)
  const double tau = models::localization_scales(qp, qp.gamma).tau;
  const double sigma0 = 10.0 * ell;
  Ket psi = qbm.grid.sample([&](double x) { return cplx(std::exp(-x * x / (2.0 * sigma0 * sigma0))); });
  psi.normalize();
  const Operator x2 = qbm.x * qbm.x;
  auto var_x = [&](const Ket& s) {
    const double m = hilbert::expectation(s, qbm.x).real();
    return hilbert::expectation(s, x2).real() - m * m;
  };
  const double dt = 2e-4, t_final = 5.0 * tau;
  const long steps = std::lround(t_final / dt), every = std::lround(0.25 / dt);
  std::vector<double> series{var_x(psi)};
  for (long s = 1; s <= steps; ++s) {
    psi = born::deterministic_step(qbm.model, psi, dt);
    if (s % every == 0) series.push_back(var_x(psi));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < series.size(); ++i) monotone = monotone && series[i] <= series[i - 1] * (1.0 + kMonotoneSlack);
  const double width = std::sqrt(2.0 * series.back());
  const double ratio = width / ell;

  const Ket coh = phase::coherent_state(0.0, 0.0, qbm_coherent_width(qp), qbm.grid);
  const double rate = born::branch_set(qbm.model, coh).total_rate;
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = monotone && ratio <= kWidthFactor && ratio >= 1.0 / kWidthFactor && rate <= kCoherentRateTol &&
           secs <= kLocalizationSeconds;
  o.detail = "dim 256, t = 5 tau: width " + fmt("%.3f", sigma0) + " -> " + fmt("%.3f", width) +
             " (ratio to hbar/sqrt(m kT) " + fmt("%.3f", ratio) + ")" + (monotone ? ", monotone" : ", NOT monotone") +
             "; coherent-state branch rate " + fmt("%.1e", rate) + fmt(" (%.0f s)", secs);
  return o;
}

// ---------------------------------------------------------------- 6

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const double m = 1.0, kT = 0.25, gamma = 1.0;
  const cli::QuantumSetup q = setup_from(
      {{"type", "qbm"}, {"m", m}, {"T", kT}, {"gamma", gamma}, {"potential", {{"name", "free"}}}},
      {{"grid_n", 64}, {"grid_length", 20.0}});
  born::EnsembleOptions eo;
  eo.n_traj = 500;
  eo.trajectory.dt = 1e-3;
  eo.trajectory.n_steps = 1000;
  eo.trajectory.record_every = 100;
  eo.seed = 606;
  eo.threads = cli::threads_from_env();
  eo.accumulate_rho = false;
  eo.keep_records = 0;
  const auto res = born::ensemble_run(q.model, q.psi0, eo, &q.obs);
  std::vector<double> var_ep;
  for (const auto& s : res.moments) var_ep.push_back(s.var_ep);
  const auto fit = classical::diffusion_fit(res.times, var_ep, gamma);
  const double expected = 4.0 * gamma * m * kT;
  const double slope_rel = std::abs(fit.diffusion - expected) / expected;

  classical::LangevinParams lp;
  lp.m = m;
  lp.kT = kT;
  lp.gamma = gamma;
  lp.dt = 2e-3;
  auto ens = classical::ClassicalEnsemble::gaussian(100000, {0.0, 0.0}, 1.0, 0.0, 607);
  classical::langevin_evolve(ens, lp, 1500, cli::threads_from_env());
  const double kinetic = classical::equipartition_check(ens, lp).kinetic_ratio;
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = slope_rel <= kSlopeTol && std::abs(kinetic - 1.0) <= kEquipartitionTol && secs <= kBridgeSeconds;
  o.detail = "Born Var(<p>) growth " + fmt("%.3g", fit.diffusion) + " vs 4 gamma m kT = " + fmt("%.3g", expected) +
             " (rel diff " + fmt("%.3f", slope_rel) + "); Langevin <p^2>/(m kT) = " + fmt("%.4f", kinetic) +
             " over 1e5 samples" + fmt(" (%.0f s)", secs);
  return o;
}

// ---------------------------------------------------------------- 7

struct RotorCompare {
  double var_rel = 0.0;   // |Δ Var(L)| / Var(L)_classical
  double mean_rel = 0.0;  // |Δ <L>| / sd(L)_classical
  double circ = 0.0;      // |Δ <e^{iθ}>|
  double worst() const { return std::max({var_rel, mean_rel, circ}); }
};

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  models::KickedRotorParams rp;
  rp.kick = 10.0;
  rp.dim = 201;
  rp.validate();
  const double w = 0.25, theta0 = 2.0, l0 = 0.0;
  const int kicks = 6;
  const phase::AngularBasis basis{rp.dim, rp.hbar};
  const Operator u = models::rotor_floquet(rp);
  Ket psi = phase::coherent_state(theta0, l0, w, basis);

  const models::StandardMap map{rp.kick, rp.inertia, rp.period};
  const auto lyap = models::lyapunov_estimate(map, 1000, 50, 707);
  const double chirikov = std::log(rp.k_eff() / 2.0);
  const double t_e = models::ehrenfest_time(lyap.lambda, rp.action_ratio() * rp.hbar, rp.hbar);

  // Classical ensemble from the coherent state's Wigner marginals, compared after
  // smoothing with the Husimi kernel.
  const long n_pts = 100000;
  std::vector<models::PhasePoint> pts;
  pts.reserve(n_pts);
  for (long i = 0; i < n_pts; ++i) {
    SplitMix64 rng = stream(708, static_cast<std::uint64_t>(i));
    const double th = theta0 + w / std::sqrt(2.0) * rng.normal();
    const double l = l0 + rp.hbar / (w * std::sqrt(2.0)) * rng.normal();
    pts.push_back({models::wrap_angle(th), l});
  }
  const double l_edge = (rp.m_max() + 0.5) * rp.hbar;
  const auto pg = phase::PhaseGrid::cylinder(128, -l_edge, l_edge, rp.dim);
  std::vector<RotorCompare> per_kick;
  double max_edge = 0.0;
  for (int k = 0; k <= kicks; ++k) {
    if (k > 0) {
      psi = u * psi;
      for (auto& p : pts) map.forward(p);
    }
    max_edge = std::max(max_edge, models::rotor_edge_population(psi));
    const auto fm = phase::field_moments(phase::husimi(psi, basis, pg, w));
    double c = 0, s = 0, lm = 0, lv = 0;
    for (const auto& p : pts) {
      c += std::cos(p.q);
      s += std::sin(p.q);
      lm += p.p;
    }
    c /= n_pts;
    s /= n_pts;
    lm /= n_pts;
    for (const auto& p : pts) lv += (p.p - lm) * (p.p - lm);
    lv = lv / (n_pts - 1) + rp.hbar * rp.hbar / (2.0 * w * w);
    const double damp = std::exp(-w * w / 4.0);
    RotorCompare rc;
    rc.var_rel = std::abs(fm.var_p - lv) / lv;
    rc.mean_rel = std::abs(fm.mean_p - lm) / std::sqrt(lv);
    rc.circ = std::hypot(fm.resultant * std::cos(fm.mean_q) - damp * c, fm.resultant * std::sin(fm.mean_q) - damp * s);
    per_kick.push_back(rc);
  }
  double agree = 0.0, diverge = 0.0;
  std::string trace;
  for (int k = 0; k <= kicks; ++k) {
    const double v = per_kick[static_cast<std::size_t>(k)].worst();
    if (k <= t_e) agree = std::max(agree, v);
    if (k > t_e && k <= 2.0 * t_e) diverge = std::max(diverge, v);
    trace += (k ? " " : "") + fmt("%.3f", v);
  }
  const double secs = seconds_since(t0);
  const bool lyap_ok = std::abs(lyap.lambda - chirikov) <= kLyapunovTol * chirikov;
  Outcome o;
  o.pass = agree <= kRotorAgreeTol && diverge > kRotorAgreeTol && lyap_ok && 2.0 * t_e <= kicks && max_edge < 1e-6 &&
           secs <= kRotorSeconds;
  o.detail = "lambda " + fmt("%.3f", lyap.lambda) + " vs ln(K/2) " + fmt("%.3f", chirikov) + ", T_E " +
             fmt("%.2f", t_e) + " kicks; worst moment mismatch per kick [" + trace + "]; max up to T_E " +
             fmt("%.3f", agree) + ", max in (T_E, 2 T_E] " + fmt("%.3f", diverge) + "; edge population " +
             fmt("%.1e", max_edge) + fmt(" (%.0f s)", secs);
  return o;
}

// ---------------------------------------------------------------- 8

Outcome criterion8() {
  const double days = models::ehrenfest_time(1.0 / 100.0, 1e58, 1.0);
  const double years = days / 365.25;
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    SplitMix64 rng = stream(808, static_cast<std::uint64_t>(i));
    QBMParams p;
    p.m = std::exp(4.0 * (rng.uniform() - 0.5));
    p.kT = std::exp(4.0 * (rng.uniform() - 0.5));
    p.gamma = std::exp(4.0 * (rng.uniform() - 0.5));
    p.hbar = std::exp(4.0 * (rng.uniform() - 0.5));
    const double lambda = std::exp(8.0 * (rng.uniform() - 0.5));
    const auto s = models::localization_scales(p, lambda);
    worst = std::max(worst, std::abs(models::jump_rate_estimate(p, s.ell) - lambda) / lambda);
    worst = std::max(worst, std::abs(models::localization_time(p, s.ell) * lambda - 1.0));
  }
  Outcome o;
  o.pass = std::abs(years - 36.6) <= kHyperionYearsTol && years < 40.0 && worst <= kScaleTol;
  o.detail = "Hyperion: 100 days x ln(1e58) = " + fmt("%.1f", days) + " days = " + fmt("%.2f", years) +
             " years; localization scale consistency " + fmt("%.1e", worst);
  return o;
}

// ---------------------------------------------------------------- 9

Outcome criterion9() {
  const std::vector<json> configs = {
      json::parse(R"({"experiment": "born", "seed": 91, "model": {"type": "qubit_damping", "gamma": 1.0, "omega": 1.0},
                      "numerics": {"dt": 0.002, "t_final": 1.0, "n_traj": 200, "record_every": 25},
                      "output": {"trajectories": 2}})"),
      json::parse(R"({"experiment": "qsd", "seed": 92, "model": {"type": "random", "dim": 4, "n_lindblads": 2},
                      "numerics": {"dt": 0.002, "t_final": 1.0, "n_traj": 200, "record_every": 25}})"),
      json::parse(R"({"experiment": "ticker_tape", "seed": 93, "model": {"type": "measurement", "steps": 3},
                      "numerics": {"n_traj": 2000}})"),
      json::parse(R"({"experiment": "kicked_rotor", "seed": 94, "model": {"type": "rotor", "dim": 101, "kicks": 3},
                      "numerics": {"n_samples": 5000, "lyapunov_steps": 200, "lyapunov_samples": 10},
                      "output": {"dump_times": [0, 3]}})"),
      json::parse(R"({"experiment": "langevin", "seed": 95, "model": {"type": "langevin", "sd_x": 1.0, "sd_p": 0.5},
                      "numerics": {"dt": 0.002, "t_final": 0.5, "n_samples": 5000, "record_every": 50},
                      "output": {"dump_times": [0.5]}})"),
      json::parse(R"({"experiment": "bridge", "seed": 96, "model": {"type": "qbm", "potential": {"name": "free"}},
                      "numerics": {"dt": 0.002, "t_final": 0.2, "n_traj": 20, "record_every": 20, "grid_n": 64,
                                   "n_samples": 2000}})"),
  };
  const auto root = std::filesystem::temp_directory_path() / "qunravel_acceptance_9";
  Outcome o;
  int files = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const cli::RunConfig cfg = cli::parse_config_json(configs[i]);
    std::vector<std::vector<io::OutputFile>> outputs;
    for (int threads : {1, 4}) {
      cli::RunOptions opt;
      opt.threads = threads;
      opt.out_dir = (root / (std::to_string(i) + "_t" + std::to_string(threads))).string();
      std::filesystem::remove_all(*opt.out_dir);
      outputs.push_back(cli::run(cfg, opt).files);
    }
    bool same = outputs[0].size() == outputs[1].size() && !outputs[0].empty();
    for (std::size_t f = 0; same && f < outputs[0].size(); ++f)
      same = outputs[0][f].path == outputs[1][f].path && outputs[0][f].sha256 == outputs[1][f].sha256;
    files += static_cast<int>(outputs[0].size());
    if (!same) o.detail += " mismatch in " + cli::experiment_name(cfg.experiment) + ";";
    o.pass = o.pass && same;
  }
  std::filesystem::remove_all(root);
  o.detail = std::to_string(configs.size()) + " stochastic experiments at 1 and 4 workers, " + std::to_string(files) +
             " output files compared by SHA-256" + (o.pass ? ", all identical" : ";" + o.detail);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"algebraic identities", criterion1},   {"unravelling-master equivalence", criterion2},
      {"Born-rule frequencies", criterion3},  {"closed-form decay", criterion4},
      {"localization", criterion5},           {"Brownian bridge", criterion6},
      {"kicked-rotor correspondence", criterion7}, {"scale formulas", criterion8},
      {"reproducibility", criterion9},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (int i = 1; i <= 9; ++i) selected.push_back(i);
  bool all = true;
  for (int c : selected) {
    if (c < 1 || c > 9) {
      std::fprintf(stderr, "unknown criterion %d\n", c);
      return 2;
    }
    const auto& [name, check] = criteria[static_cast<std::size_t>(c - 1)];
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d (%s): %s | %s\n", c, name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}

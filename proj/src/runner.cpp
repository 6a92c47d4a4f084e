#include "qunravel/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "qunravel/classical.hpp"
#include "qunravel/discrete_born.hpp"
#include "qunravel/hilbert.hpp"
#include "qunravel/models.hpp"
#include "qunravel/phase_space.hpp"

#ifndef QUNRAVEL_VERSION
#define QUNRAVEL_VERSION "0.0.0"
#endif

namespace qunravel::cli {

using nlohmann::json;

std::string code_version() { return QUNRAVEL_VERSION; }

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool wants(const RunConfig& cfg, const std::string& format) {
  for (const auto& f : cfg.output.strings("formats"))
    if (f == format) return true;
  return false;
}

long step_count(const Block& numerics) {
  const long n = std::lround(numerics.num("t_final") / numerics.num("dt"));
  if (n < 1) throw ValidationError("t_final must cover at least one step", "numerics.t_final");
  return n;
}

std::string padded(long i, int width = 3) {
  std::string s = std::to_string(i);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

Operator ladder(int dim) {
  Operator a = Operator::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

struct Moments {
  double tr, purity, ex, ep, var_x, var_p;
};

Moments density_moments(const DensityMatrix& rho, const born::Observables& obs, const Operator& x2,
                        const Operator& p2) {
  Moments m{};
  m.tr = rho.trace().real();
  m.purity = hilbert::purity(rho);
  m.ex = (rho * obs.x).trace().real() / m.tr;
  m.ep = (rho * obs.p).trace().real() / m.tr;
  m.var_x = (rho * x2).trace().real() / m.tr - m.ex * m.ex;
  m.var_p = (rho * p2).trace().real() / m.tr - m.ep * m.ep;
  return m;
}

// ---------------------------------------------------------------- master

void run_master(const RunConfig& cfg, io::OutputSet& out, RunManifest& man, json& summary) {
  const QuantumSetup q = make_quantum_setup(cfg.model, cfg.numerics);
  const double dt = cfg.numerics.num("dt");
  const long n = step_count(cfg.numerics);
  MasterOptions mo;
  mo.record_every = static_cast<int>(cfg.numerics.integer("record_every"));
  const MasterRun run = integrate_master(q.model, q.psi0 * q.psi0.adjoint(), dt, static_cast<int>(n), mo);
  if (run.step_warning) man.warnings.push_back("dt * spectral scale exceeds 0.1");
  if (!(run.max_trace_drift <= 1e-8))
    throw NumericalContractError("master equation trace drift " + io::format_double(run.max_trace_drift) +
                                 " exceeds 1e-8");
  if (run.positivity_violations > 0)
    man.warnings.push_back("density matrix eigenvalue below -1e-6 in " + std::to_string(run.positivity_violations) +
                           " recorded states");
  const Operator x2 = q.obs.x * q.obs.x, p2 = q.obs.p * q.obs.p;
  if (wants(cfg, "csv")) {
    io::CsvWriter csv(out, "master.csv", {"t", "tr", "purity", "ex", "ep", "var_x", "var_p"});
    for (std::size_t i = 0; i < run.states.size(); ++i) {
      const Moments m = density_moments(run.states[i], q.obs, x2, p2);
      csv.cell(run.times[i]).cell(m.tr).cell(m.purity).cell(m.ex).cell(m.ep).cell(m.var_x).cell(m.var_p);
      csv.end_row();
    }
  }
  summary["max_trace_drift"] = run.max_trace_drift;
  summary["min_eigenvalue"] = run.min_eigenvalue;
  summary["positivity_violations"] = run.positivity_violations;
}

// ---------------------------------------------------------------- born / qsd

void run_unravelling(const RunConfig& cfg, born::Scheme scheme, int threads, io::OutputSet& out, RunManifest& man,
                     json& summary) {
  const QuantumSetup q = make_quantum_setup(cfg.model, cfg.numerics);
  born::EnsembleOptions eo;
  eo.scheme = scheme;
  eo.n_traj = cfg.numerics.integer("n_traj");
  eo.trajectory.dt = cfg.numerics.num("dt");
  eo.trajectory.n_steps = step_count(cfg.numerics);
  eo.trajectory.record_every = cfg.numerics.integer("record_every");
  eo.seed = cfg.seed;
  eo.threads = threads;
  eo.keep_records = static_cast<int>(cfg.output.integer("trajectories"));
  const bool oracle = cfg.numerics.flag("master_oracle") && q.model.dim() <= 64;
  eo.accumulate_rho = oracle;
  const born::EnsembleResult res = born::ensemble_run(q.model, q.psi0, eo, &q.obs);
  if (!(res.max_norm_error <= 1e-8))
    throw NumericalContractError("conditioned-state norm error " + io::format_double(res.max_norm_error) +
                                 " exceeds 1e-8");
  if (res.step_warning) man.warnings.push_back("dt * total rate exceeded 0.1 in some step");

  std::vector<double> distance;
  if (oracle) {
    MasterOptions mo;
    mo.record_every = static_cast<int>(eo.trajectory.record_every);
    mo.check_positivity = false;
    const MasterRun master =
        integrate_master(q.model, q.psi0 * q.psi0.adjoint(), eo.trajectory.dt, static_cast<int>(eo.trajectory.n_steps), mo);
    for (std::size_t i = 0; i < res.rho.size(); ++i) distance.push_back(hilbert::trace_distance(res.rho[i], master.states[i]));
  }

  if (wants(cfg, "csv")) {
    for (const auto& rec : res.records) {
      io::CsvWriter csv(out, "trajectory_" + padded(static_cast<long>(rec.index)) + ".csv",
                        {"step", "t", "jumped", "branch_index", "n_jumps_cum", "ex", "ep", "var_x", "var_p"});
      for (const auto& row : rec.rows) {
        csv.cell(row.step).cell(row.t).cell(row.jumped ? 1 : 0).cell(row.branch_index).cell(row.n_jumps_cum);
        csv.cell(row.ex).cell(row.ep).cell(row.var_x).cell(row.var_p);
        csv.end_row();
      }
    }
  }
  if (wants(cfg, "ndjson")) {
    io::NdjsonWriter nd(out, "ensemble.ndjson");
    for (std::size_t i = 0; i < res.times.size(); ++i) {
      json r{{"t", res.times[i]}};
      if (oracle) r["trace_distance_to_master"] = distance[i];
      const auto& m = res.moments[i];
      r["mean_ex"] = m.mean_ex;
      r["mean_ep"] = m.mean_ep;
      r["mean_var_x"] = m.mean_var_x;
      r["mean_var_p"] = m.mean_var_p;
      r["var_ex"] = m.var_ex;
      r["var_ep"] = m.var_ep;
      nd.write(r);
    }
  }
  summary["scheme"] = scheme == born::Scheme::born ? "born" : "qsd";
  summary["n_traj"] = eo.n_traj;
  summary["total_jumps"] = res.total_jumps;
  summary["max_norm_error"] = res.max_norm_error;
  summary["jump_sq_dx_rate"] = res.mean_jump_sq_dx_rate;
  summary["jump_sq_dp_rate"] = res.mean_jump_sq_dp_rate;
  if (oracle) {
    double worst = 0.0;
    for (double d : distance) worst = std::max(worst, d);
    summary["max_trace_distance"] = worst;
    summary["trace_distance_tol"] = cfg.numerics.num("trace_distance_tol");
    summary["within_tolerance"] = worst <= cfg.numerics.num("trace_distance_tol");
  }
}

// ---------------------------------------------------------------- ticker tape

Ket apply_on_pair(const Ket& psi, const std::vector<int>& dims, int env_factor, const Operator& u) {
  const hilbert::CompositeSpace space(dims);
  Ket out = Ket::Zero(psi.size());
  const int de = dims[static_cast<std::size_t>(env_factor)];
  for (int flat = 0; flat < space.total_dim(); ++flat) {
    if (psi(flat) == cplx(0.0)) continue;
    auto idx = space.multi_index(flat);
    const int col = idx[0] * de + idx[static_cast<std::size_t>(env_factor)];
    for (int a = 0; a < dims[0]; ++a)
      for (int e = 0; e < de; ++e) {
        idx[0] = a;
        idx[static_cast<std::size_t>(env_factor)] = e;
        out(space.flat_index(idx)) += u(a * de + e, col) * psi(flat);
      }
  }
  return out;
}

void run_ticker_tape(const RunConfig& cfg, io::OutputSet& out, RunManifest& man, json& summary) {
  const double c = cfg.model.num("c1_sq");
  const long steps = cfg.model.integer("steps");
  const double strength = cfg.model.num("strength");
  Ket m0(2);
  m0 << std::sqrt(c), std::sqrt(1.0 - c);
  // Pointer coupling: |0> leaves the fresh bit alone, |1> rotates it by strength * π.
  const double phi = strength * std::numbers::pi;
  Operator ry(2, 2);
  ry << std::cos(phi / 2), -std::sin(phi / 2), std::sin(phi / 2), std::cos(phi / 2);
  discrete::InteractionStep step;
  step.env_dim = 2;
  step.env_init = hilbert::basis(2, 0);
  step.unitary = hilbert::tensor(hilbert::projector(hilbert::basis(2, 0)), Operator(Operator::Identity(2, 2))) +
                 hilbert::tensor(hilbert::projector(hilbert::basis(2, 1)), ry);
  const std::vector<discrete::InteractionStep> all(static_cast<std::size_t>(steps), step);

  const auto tape = discrete::run_ticker_tape(m0, all, cfg.seed);
  double leaf_sum = 0.0;
  for (int id : tape.tree.leaves()) leaf_sum += tape.tree.nodes[static_cast<std::size_t>(id)].prob;

  const long n_hist = cfg.numerics.integer("n_traj");
  std::vector<long> first_counts(2, 0);
  for (long i = 0; i < n_hist; ++i) {
    SplitMix64 rng = stream(cfg.seed, static_cast<std::uint64_t>(i) + 1);
    const auto h = discrete::sample_history(m0, all, rng);
    ++first_counts[static_cast<std::size_t>(h.outcomes.front())];
  }

  json first_step = json::array();
  for (int child : tape.tree.nodes[0].children) {
    const auto& node = tape.tree.nodes[static_cast<std::size_t>(child)];
    const int label = node.label.back();
    const double freq = static_cast<double>(first_counts[static_cast<std::size_t>(label)]) / static_cast<double>(n_hist);
    const double sigma = std::sqrt(node.prob * (1.0 - node.prob) / static_cast<double>(n_hist));
    first_step.push_back({{"label", label}, {"probability", node.prob}, {"frequency", freq}, {"binomial_sigma", sigma},
                          {"within_3_sigma", std::abs(freq - node.prob) <= 3.0 * sigma}});
  }

  if (steps <= 11) {
    std::vector<int> dims(static_cast<std::size_t>(steps + 1), 2);
    Ket total = Ket::Zero(1 << (steps + 1));
    total(0) = m0(0);
    total(1 << steps) = m0(1);
    for (long k = 1; k <= steps; ++k) total = apply_on_pair(total, dims, static_cast<int>(k), step.unitary);
    const DensityMatrix exact = hilbert::reduced_state(total, hilbert::CompositeSpace({2, 1 << steps}), 0);
    summary["tree_vs_exact_trace_distance"] =
        hilbert::trace_distance(tape.tree.unconditioned(static_cast<int>(steps)), exact);
  } else {
    man.warnings.push_back("exact total-state oracle skipped for more than 11 steps");
  }

  if (wants(cfg, "ndjson")) {
    io::NdjsonWriter tree(out, "tree.ndjson");
    for (const auto& n : tape.tree.nodes)
      tree.write({{"id", n.id}, {"parent", n.parent}, {"depth", n.depth}, {"label", n.label}, {"prob", n.prob}});
    tree.close();
    io::NdjsonWriter traj(out, "trajectory.ndjson");
    for (std::size_t k = 0; k < tape.trajectory.size(); ++k) {
      const auto& n = tape.tree.nodes[static_cast<std::size_t>(tape.trajectory[k])];
      traj.write({{"step", k}, {"node", n.id}, {"label", n.label}, {"prob", n.prob}});
    }
  }
  summary["leaf_probability_sum"] = leaf_sum;
  summary["first_step"] = first_step;
  summary["histories"] = n_hist;
}

// ---------------------------------------------------------------- kicked rotor

struct RotorMoments {
  double cos1 = 0, sin1 = 0, mean_l = 0, var_l = 0;
};

RotorMoments classical_rotor_moments(const std::vector<models::PhasePoint>& pts) {
  RotorMoments m;
  double c = 0, s = 0, l = 0;
  for (const auto& p : pts) {
    c += std::cos(p.q);
    s += std::sin(p.q);
    l += p.p;
  }
  const double n = static_cast<double>(pts.size());
  m.cos1 = c / n;
  m.sin1 = s / n;
  m.mean_l = l / n;
  double v = 0;
  for (const auto& p : pts) v += (p.p - m.mean_l) * (p.p - m.mean_l);
  m.var_l = v / (n - 1.0);
  return m;
}

void run_kicked_rotor(const RunConfig& cfg, io::OutputSet& out, RunManifest& man, json& summary) {
  const auto& md = cfg.model;
  models::KickedRotorParams rp;
  rp.kick = md.num("kick");
  rp.inertia = md.num("inertia");
  rp.period = md.num("period");
  rp.hbar = md.num("hbar");
  rp.dim = static_cast<int>(md.integer("dim"));
  rp.validate();
  const int kicks = static_cast<int>(md.integer("kicks"));
  const double w = md.num("width");
  const phase::AngularBasis basis{rp.dim, rp.hbar};
  const Operator u = models::rotor_floquet(rp);
  Ket psi = phase::coherent_state(md.num("theta0"), md.num("l0"), w, basis);

  // Classical points drawn from the coherent state's Wigner marginals.
  const double sd_theta = w / std::sqrt(2.0);
  const double sd_l = rp.hbar / (w * std::sqrt(2.0));
  const long n_pts = cfg.numerics.integer("n_samples");
  std::vector<models::PhasePoint> pts;
  pts.reserve(static_cast<std::size_t>(n_pts));
  for (long i = 0; i < n_pts; ++i) {
    SplitMix64 rng = stream(cfg.seed, static_cast<std::uint64_t>(i));
    const double th = md.num("theta0") + sd_theta * rng.normal();
    const double l = md.num("l0") + sd_l * rng.normal();
    pts.push_back({models::wrap_angle(th), l});
  }
  const models::StandardMap map{rp.kick, rp.inertia, rp.period};
  const auto lyap = models::lyapunov_estimate(map, static_cast<int>(cfg.numerics.integer("lyapunov_steps")),
                                              static_cast<int>(cfg.numerics.integer("lyapunov_samples")), cfg.seed);
  const double t_e = lyap.lambda > 0.0 ? models::ehrenfest_time(lyap.lambda, rp.action_ratio() * rp.hbar, rp.hbar)
                                       : std::numeric_limits<double>::infinity();

  const int nq = static_cast<int>(cfg.numerics.integer("phase_grid_n"));
  const double l_edge = (rp.m_max() + 0.5) * rp.hbar;
  const auto pg = phase::PhaseGrid::cylinder(nq, -l_edge, l_edge, rp.dim);
  const double kernel_var_l = rp.hbar * rp.hbar / (2.0 * w * w);
  const double kernel_damp = std::exp(-w * w / 4.0);
  const auto dumps = cfg.output.numbers("dump_times");
  auto is_dump = [&](int k) {
    for (double d : dumps)
      if (std::lround(d) == k) return true;
    return false;
  };

  std::unique_ptr<io::CsvWriter> csv;
  if (wants(cfg, "csv"))
    csv = std::make_unique<io::CsvWriter>(
        out, "rotor_moments.csv",
        std::vector<std::string>{"kick", "q_cos", "q_sin", "q_mean_l", "q_var_l", "c_cos", "c_sin", "c_mean_l",
                                 "c_var_l", "var_l_rel_diff", "edge_population"});
  double max_edge = 0.0;
  json per_kick = json::array();
  for (int k = 0; k <= kicks; ++k) {
    if (k > 0) {
      psi = u * psi;
      for (auto& p : pts) map.forward(p);
    }
    const double edge = models::rotor_edge_population(psi);
    max_edge = std::max(max_edge, edge);
    const auto field = phase::husimi(psi, basis, pg, w);
    const auto fm = phase::field_moments(field);
    RotorMoments cm = classical_rotor_moments(pts);
    cm.cos1 *= kernel_damp;
    cm.sin1 *= kernel_damp;
    cm.var_l += kernel_var_l;
    const double qc = fm.resultant * std::cos(fm.mean_q), qs = fm.resultant * std::sin(fm.mean_q);
    const double rel = std::abs(fm.var_p - cm.var_l) / cm.var_l;
    if (csv) {
      csv->cell(k).cell(qc).cell(qs).cell(fm.mean_p).cell(fm.var_p);
      csv->cell(cm.cos1).cell(cm.sin1).cell(cm.mean_l).cell(cm.var_l).cell(rel).cell(edge);
      csv->end_row();
    }
    per_kick.push_back({{"kick", k}, {"var_l_rel_diff", rel}});
    if (is_dump(k)) {
      io::write_field(out, "husimi_k" + padded(k), field, k * rp.period, "husimi");
      if (wants(cfg, "csv")) {
        io::CsvWriter pc(out, "classical_k" + padded(k) + ".csv", {"theta", "p"});
        for (const auto& p : pts) {
          pc.cell(p.q).cell(p.p);
          pc.end_row();
        }
      }
    }
  }
  if (max_edge >= 1e-6) man.warnings.push_back("truncation edge population reached " + io::format_double(max_edge));
  summary["lyapunov"] = {{"lambda", lyap.lambda}, {"std_error", lyap.std_error}, {"chirikov", std::log(rp.k_eff() / 2.0)}};
  summary["ehrenfest_time"] = t_e;
  summary["max_edge_population"] = max_edge;
  summary["truncation_flagged"] = max_edge >= 1e-6;
  summary["per_kick"] = per_kick;
}

// ---------------------------------------------------------------- langevin

classical::LangevinParams langevin_params(const RunConfig& cfg) {
  const auto& md = cfg.model;
  classical::LangevinParams lp;
  lp.m = md.num("m");
  lp.gamma = md.num("gamma");
  lp.kT = md.num("kB") * md.num("T");
  lp.potential = potential_from(md.sub("potential"), lp.m);
  lp.dt = cfg.numerics.num("dt");
  if (md.has("x_noise")) lp.x_noise = md.num("x_noise");
  return lp;
}

void run_langevin(const RunConfig& cfg, int threads, io::OutputSet& out, RunManifest& man, json& summary) {
  const auto lp = langevin_params(cfg);
  const auto& md = cfg.model;
  auto ens = classical::ClassicalEnsemble::gaussian(static_cast<std::size_t>(cfg.numerics.integer("n_samples")),
                                                    {md.num("x0"), md.num("p0")}, md.num("sd_x"), md.num("sd_p"), cfg.seed);
  const long n = step_count(cfg.numerics);
  const long every = cfg.numerics.integer("record_every");
  const auto dumps = cfg.output.numbers("dump_times");
  std::vector<classical::ClassicalEnsemble> snaps{ens};
  std::vector<double> times{0.0};
  bool warn = false;
  for (long s = every; s <= n; s += every) {
    warn = classical::langevin_evolve(ens, lp, every, threads) || warn;
    snaps.push_back(ens);
    times.push_back(static_cast<double>(s) * lp.dt);
  }
  if (warn) man.warnings.push_back("dt * gamma exceeds 0.05");
  if (wants(cfg, "csv")) {
    io::CsvWriter csv(out, "moments.csv", {"t", "mean_x", "mean_p", "var_x", "var_p", "cov_xp", "mean_p2"});
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      const auto m = classical::ensemble_moments(snaps[i]);
      csv.cell(times[i]).cell(m.mean_x).cell(m.mean_p).cell(m.var_x).cell(m.var_p).cell(m.cov_xp).cell(m.mean_p2);
      csv.end_row();
    }
    csv.close();
    for (std::size_t i = 0; i < snaps.size(); ++i)
      for (double d : dumps)
        if (std::abs(d - times[i]) <= 0.5 * lp.dt * static_cast<double>(every)) {
          io::CsvWriter pc(out, "ensemble_" + padded(static_cast<long>(i), 4) + ".csv", {"x", "p"});
          for (const auto& p : snaps[i].points) {
            pc.cell(p.q).cell(p.p);
            pc.end_row();
          }
          break;
        }
  }
  const auto eq = classical::equipartition_check(ens, lp);
  summary["kinetic_ratio"] = eq.kinetic_ratio;
  summary["potential_ratio"] = eq.potential_ratio;
  if (lp.potential.kind == PotentialSpec::Kind::free || lp.potential.kind == PotentialSpec::Kind::harmonic) {
    const auto fp = classical::fokker_planck_moment_check(snaps, times, lp);
    json intervals = json::array();
    for (const auto& c : fp.intervals)
      intervals.push_back({{"t", c.t}, {"dp_dt", c.dp_dt}, {"dp_dt_pred", c.dp_dt_pred}, {"dp_dt_se", c.dp_dt_se},
                           {"dvar_dt", c.dvar_dt}, {"dvar_dt_pred", c.dvar_dt_pred}, {"dvar_dt_se", c.dvar_dt_se}});
    io::write_json_file(out, "fokker_planck.json", {{"max_z", fp.max_z}, {"passes", fp.passes}, {"intervals", intervals}});
    summary["fokker_planck_passes"] = fp.passes;
  }
}

// ---------------------------------------------------------------- bridge

void run_bridge(const RunConfig& cfg, int threads, io::OutputSet& out, RunManifest& man, json& summary) {
  const QuantumSetup q = make_quantum_setup(cfg.model, cfg.numerics);
  born::EnsembleOptions eo;
  eo.n_traj = cfg.numerics.integer("n_traj");
  eo.trajectory.dt = cfg.numerics.num("dt");
  eo.trajectory.n_steps = step_count(cfg.numerics);
  eo.trajectory.record_every = cfg.numerics.integer("record_every");
  eo.seed = cfg.seed;
  eo.threads = threads;
  eo.accumulate_rho = false;
  eo.keep_records = 0;
  const auto res = born::ensemble_run(q.model, q.psi0, eo, &q.obs);
  if (!(res.max_norm_error <= 1e-8)) throw NumericalContractError("conditioned-state norm error exceeds 1e-8");

  classical::LangevinParams lp;
  lp.m = q.qbm->params.m;
  lp.gamma = q.qbm->params.gamma;
  lp.kT = q.qbm->params.kT;
  lp.potential = q.qbm->params.potential;
  lp.dt = eo.trajectory.dt;
  // Matched start: every sample sits at the initial conditioned means.
  const auto& m0 = res.moments.front();
  auto ens = classical::ClassicalEnsemble::gaussian(static_cast<std::size_t>(cfg.numerics.integer("n_samples")),
                                                    {m0.mean_ex, m0.mean_ep}, std::sqrt(m0.var_ex), std::sqrt(m0.var_ep),
                                                    cfg.seed ^ 0x5bd1e995ULL);
  classical::MomentSeries qs, cs;
  qs.samples = static_cast<std::size_t>(eo.n_traj);
  cs.samples = ens.size();
  for (std::size_t i = 0; i < res.moments.size(); ++i) {
    if (i > 0) {
      if (classical::langevin_evolve(ens, lp, eo.trajectory.record_every, threads))
        man.warnings.push_back("dt * gamma exceeds 0.05");
    }
    const auto cm = classical::ensemble_moments(ens);
    qs.times.push_back(res.times[i]);
    qs.mean_p.push_back(res.moments[i].mean_ep);
    qs.var_p.push_back(res.moments[i].var_ep);
    cs.times.push_back(res.times[i]);
    cs.mean_p.push_back(cm.mean_p);
    cs.var_p.push_back(cm.var_p);
  }
  const auto rep = classical::moment_bridge(qs, cs, lp.gamma, cfg.numerics.num("bridge_tolerance"));
  if (wants(cfg, "csv")) {
    io::CsvWriter csv(out, "bridge_moments.csv", {"t", "q_mean_p", "q_var_p", "c_mean_p", "c_var_p", "z"});
    for (std::size_t i = 0; i < qs.times.size(); ++i) {
      csv.cell(qs.times[i]).cell(qs.mean_p[i]).cell(qs.var_p[i]).cell(cs.mean_p[i]).cell(cs.var_p[i]).cell(rep.z[i]);
      csv.end_row();
    }
  }
  const double expected = 4.0 * lp.gamma * lp.m * lp.kT;
  io::write_json_file(out, "bridge.json",
                      {{"quantum_diffusion", rep.quantum.diffusion},
                       {"quantum_diffusion_se", rep.quantum.std_error},
                       {"classical_diffusion", rep.classical.diffusion},
                       {"classical_diffusion_se", rep.classical.std_error},
                       {"expected_diffusion", expected},
                       {"slope_rel_diff", rep.slope_rel_diff},
                       {"tolerance", rep.tolerance},
                       {"passes", rep.passes},
                       {"jump_sq_dp_rate", res.mean_jump_sq_dp_rate}});
  summary["bridge_passes"] = rep.passes;
}

// ---------------------------------------------------------------- scales

void run_scales(const RunConfig& cfg, io::OutputSet& out, json& summary) {
  const auto& md = cfg.model;
  const double hbar = md.num("hbar");
  const double lambda = md.num("lambda");
  const double t_e = models::ehrenfest_time(lambda, md.num("action_ratio") * hbar, hbar);
  QBMParams qp;
  qp.m = md.num("m");
  qp.kT = md.num("kB") * md.num("T");
  qp.gamma = md.num("gamma");
  qp.hbar = hbar;
  const auto ls = models::localization_scales(qp, lambda);
  const json report{{"ehrenfest_time", t_e},
                    {"ehrenfest_time_years_if_days", t_e / 365.25},
                    {"ell", ls.ell},
                    {"tau", ls.tau},
                    {"r_est", ls.r_est},
                    {"r_est_times_tau", ls.r_est * ls.tau},
                    {"thermal_length", hbar / std::sqrt(qp.m * qp.kT)}};
  io::write_json_file(out, "scales.json", report);
  summary["scales"] = report;
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  json files_json = json::array();
  for (const auto& f : files) files_json.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"experiment", experiment}, {"config_hash", config_hash}, {"seed", seed},
          {"code_version", code_version}, {"rng", rng}, {"threads", threads},
          {"start_time", start_time}, {"end_time", end_time}, {"files", files_json}, {"warnings", warnings}};
}

PotentialSpec potential_from(const Block& p, double mass) {
  switch (PotentialSpec::parse_kind(p.str("name"))) {
    case PotentialSpec::Kind::free: return PotentialSpec::free_particle();
    case PotentialSpec::Kind::harmonic: return PotentialSpec::harmonic(mass, p.num("omega"));
    case PotentialSpec::Kind::double_well: return PotentialSpec::double_well(p.num("a"), p.num("b"));
    case PotentialSpec::Kind::cosine: return PotentialSpec::cosine(p.num("v0"), p.num("q"));
  }
  return {};
}

QBMParams qbm_params(const Block& md) {
  QBMParams qp;
  qp.m = md.num("m");
  qp.kT = md.num("kB") * md.num("T");
  qp.gamma = md.num("gamma");
  qp.hbar = md.num("hbar");
  qp.potential = potential_from(md.sub("potential"), qp.m);
  return qp;
}

QuantumSetup make_quantum_setup(const Block& md, const Block& numerics) {
  const std::string type = md.str("type");
  const double hbar = md.num("hbar");
  QuantumSetup s;
  s.model.hbar = hbar;
  if (type == "qubit_damping" || type == "qubit_dephasing") {
    const double g = md.num("gamma");
    s.model.H = 0.5 * hbar * md.num("omega") * hilbert::sigma_z();
    if (type == "qubit_damping") {
      s.model.lindblads.push_back(std::sqrt(g) * hilbert::sigma_minus());
      s.psi0 = hilbert::basis(2, 0);
    } else {
      s.model.lindblads.push_back(std::sqrt(g) * hilbert::sigma_z());
      s.psi0 = Ket::Ones(2) / std::sqrt(2.0);
    }
    s.obs = {hilbert::sigma_x(), hilbert::sigma_y()};
  } else if (type == "random") {
    const int d = static_cast<int>(md.integer("dim"));
    SplitMix64 rng = stream(md.u64("model_seed"), 0);
    s.model.H = hbar * hilbert::random_hermitian(d, rng) / std::sqrt(static_cast<double>(d));
    const double scale = std::sqrt(md.num("rate") / static_cast<double>(d));
    for (long i = 0; i < md.integer("n_lindblads"); ++i) s.model.lindblads.push_back(scale * hilbert::random_operator(d, rng));
    s.psi0 = hilbert::random_state(d, rng);
    const Operator a = ladder(d);
    s.obs = {(a + a.adjoint()) / std::sqrt(2.0), I * (a.adjoint() - a) / std::sqrt(2.0)};
  } else if (type == "qbm") {
    const QBMParams qp = qbm_params(md);
    QBMModel q = build_qbm(qp, {static_cast<int>(numerics.integer("grid_n")), numerics.num("grid_length")},
                           md.flag("caldeira_leggett"));
    const double width = md.num("initial_width") > 0.0 ? md.num("initial_width") : qbm_coherent_width(qp);
    s.psi0 = phase::coherent_state(md.num("x0"), md.num("p0"), width, q.grid);
    s.model = q.model;
    s.obs = {q.x, q.p};
    s.qbm = std::move(q);
  } else {
    throw ValidationError("model type '" + type + "' is not a quantum master-equation model", "model.type");
  }
  s.model.validate();
  return s;
}

int threads_from_env() {
  if (const char* env = std::getenv("SIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    throw ValidationError("SIM_THREADS must be a positive integer", "SIM_THREADS");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunManifest run(const RunConfig& cfg, const RunOptions& options) {
  RunManifest man;
  man.experiment = experiment_name(cfg.experiment);
  man.config_hash = io::sha256_hex(cfg.canonical());
  man.seed = cfg.seed;
  man.code_version = code_version();
  man.rng = kRngName;
  man.threads = std::max(1, options.threads);
  man.start_time = utc_now();

  io::OutputSet out(options.out_dir.value_or(cfg.output.str("directory")));
  io::write_json_file(out, "config.json", cfg.to_json());
  json summary = json::object();
  switch (cfg.experiment) {
    case Experiment::master: run_master(cfg, out, man, summary); break;
    case Experiment::born: run_unravelling(cfg, born::Scheme::born, man.threads, out, man, summary); break;
    case Experiment::qsd: run_unravelling(cfg, born::Scheme::qsd, man.threads, out, man, summary); break;
    case Experiment::ticker_tape: run_ticker_tape(cfg, out, man, summary); break;
    case Experiment::kicked_rotor: run_kicked_rotor(cfg, out, man, summary); break;
    case Experiment::langevin: run_langevin(cfg, man.threads, out, man, summary); break;
    case Experiment::bridge: run_bridge(cfg, man.threads, out, man, summary); break;
    case Experiment::scales: run_scales(cfg, out, summary); break;
  }
  io::write_json_file(out, "summary.json", summary);
  man.files = out.files();
  man.end_time = utc_now();
  {
    std::ofstream mf(out.resolve("manifest.json"));
    if (!mf) throw Error("cannot write manifest.json");
    mf << io::dump_json(man.to_json(), 2) << '\n';
  }
  return man;
}

}  // namespace qunravel::cli

#include "qunravel/discrete_born.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qunravel::discrete {

using hilbert::CompositeSpace;

void validate_step(const InteractionStep& step) {
  if (step.env_dim <= 0) throw ValidationError("interaction step: env_dim must be positive");
  if (step.env_init.size() != step.env_dim) throw ValidationError("interaction step: env_init has wrong dimension");
  if (step.unitary.rows() != step.unitary.cols() || step.unitary.rows() % step.env_dim != 0)
    throw ValidationError("interaction step: unitary dimension is not a multiple of env_dim");
  if (!hilbert::is_unitary(step.unitary, 1e-10)) throw ValidationError("interaction step: operator is not unitary");
}

Operator kraus_completeness(const KrausSet& set) {
  if (set.ops.empty()) return Operator();
  Operator sum = Operator::Zero(set.ops.front().rows(), set.ops.front().cols());
  for (const auto& k : set.ops) sum.noalias() += k.adjoint() * k;
  return sum;
}

DensityMatrix apply_channel(const KrausSet& set, const DensityMatrix& rho) {
  DensityMatrix out = DensityMatrix::Zero(rho.rows(), rho.cols());
  for (const auto& k : set.ops) out.noalias() += k * rho * k.adjoint();
  return out;
}

KrausSet kraus_from_interaction(const InteractionStep& step, const std::vector<Ket>& env_basis) {
  validate_step(step);
  const int de = step.env_dim;
  const int dm = static_cast<int>(step.unitary.rows()) / de;
  if (static_cast<int>(env_basis.size()) != de) throw ValidationError("environment basis is incomplete");
  for (int a = 0; a < de; ++a) {
    if (env_basis[static_cast<std::size_t>(a)].size() != de)
      throw ValidationError("environment basis vector has wrong dimension");
    for (int b = 0; b < de; ++b) {
      const cplx g = env_basis[static_cast<std::size_t>(a)].dot(env_basis[static_cast<std::size_t>(b)]);
      if (std::abs(g - (a == b ? 1.0 : 0.0)) > 1e-10)
        throw ValidationError("environment basis is not orthonormal");
    }
  }
  // U |E_0> as an (dm*de) x dm block, then contract with <E_a|.
  Operator u_e0 = Operator::Zero(dm * de, dm);
  for (int j = 0; j < dm; ++j)
    for (int l = 0; l < de; ++l) u_e0.col(j) += step.unitary.col(j * de + l) * step.env_init(l);
  KrausSet set;
  set.ops.reserve(static_cast<std::size_t>(de));
  for (const auto& ea : env_basis) {
    Operator k = Operator::Zero(dm, dm);
    for (int i = 0; i < dm; ++i)
      for (int kk = 0; kk < de; ++kk) k.row(i) += std::conj(ea(kk)) * u_e0.row(i * de + kk);
    set.ops.push_back(std::move(k));
  }
  return set;
}

KrausSet kraus_from_interaction(const InteractionStep& step) {
  std::vector<Ket> basis;
  for (int a = 0; a < step.env_dim; ++a) basis.push_back(hilbert::basis(step.env_dim, a));
  return kraus_from_interaction(step, basis);
}

KrausSet orthogonality_fix(const KrausSet& set, const Ket& m0) {
  const auto n = static_cast<int>(set.ops.size());
  if (n == 0) return set;
  std::vector<Ket> images;
  images.reserve(static_cast<std::size_t>(n));
  for (const auto& k : set.ops) images.push_back(k * m0);
  Operator gram(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) gram(a, b) = images[static_cast<std::size_t>(a)].dot(images[static_cast<std::size_t>(b)]);
  Eigen::SelfAdjointEigenSolver<Operator> solver(0.5 * (gram + gram.adjoint()));

  KrausSet out;
  out.ops.reserve(static_cast<std::size_t>(n));
  for (int c = n - 1; c >= 0; --c) {  // descending probability
    Operator k = Operator::Zero(set.ops.front().rows(), set.ops.front().cols());
    Ket image = Ket::Zero(m0.size());
    for (int a = 0; a < n; ++a) {
      const cplx w = solver.eigenvectors()(a, c);
      k += w * set.ops[static_cast<std::size_t>(a)];
      image += w * images[static_cast<std::size_t>(a)];
    }
    const cplx phase = hilbert::fix_phase_largest(image);
    out.ops.push_back(phase * k);
    out.probs.push_back(std::max(0.0, solver.eigenvalues()(c)));
  }
  for (std::size_t c = 0; c + 1 < out.probs.size(); ++c) {
    if (out.probs[c] > 1e-8 && out.probs[c] - out.probs[c + 1] < 1e-8) out.generic = false;
  }
  return out;
}

KrausSet orthogonality_fix(const KrausSet& set, const DensityMatrix& rho0) {
  if (rho0.rows() != rho0.cols()) throw ValidationError("reference state must be square");
  if (std::abs(hilbert::purity(rho0) - 1.0) > 1e-8 || std::abs(rho0.trace() - 1.0) > 1e-8)
    throw ValidationError("orthogonality fixing needs a pure reference state");
  const auto eig = hilbert::eig_hermitian(rho0, 1e-8);
  const Ket m0 = eig.vectors.col(eig.vectors.cols() - 1);
  return orthogonality_fix(set, m0);
}

RateMatrix schmidt_rate_matrix(const Ket& psi, const Operator& h_int, const CompositeSpace& space, double hbar) {
  if (h_int.rows() != space.total_dim() || h_int.cols() != space.total_dim())
    throw ValidationError("interaction Hamiltonian dimension does not match the composite space");
  if (!hilbert::is_hermitian(h_int, 1e-10)) throw ValidationError("interaction Hamiltonian is not Hermitian");
  const auto schmidt = hilbert::schmidt_decompose(psi, space);
  const auto n = static_cast<int>(schmidt.terms.size());

  std::vector<Ket> products;
  products.reserve(static_cast<std::size_t>(n));
  for (const auto& t : schmidt.terms) products.push_back(t.coeff * hilbert::tensor(t.left, t.right));

  RateMatrix out;
  out.generic = schmidt.generic;
  out.probs.resize(n);
  out.omega.resize(n, n);
  for (int b = 0; b < n; ++b) {
    const auto& tb = schmidt.terms[static_cast<std::size_t>(b)];
    out.probs(b) = tb.coeff * tb.coeff;
    const Ket h_b = h_int * products[static_cast<std::size_t>(b)];
    for (int a = 0; a < n; ++a) out.omega(a, b) = products[static_cast<std::size_t>(a)].dot(h_b) / (I * hbar);
  }
  out.flow = (out.omega - out.omega.transpose()).real();
  out.rates = RealMatrix::Zero(n, n);
  for (int b = 0; b < n; ++b) {
    if (out.probs(b) <= 0.0) continue;
    for (int a = 0; a < n; ++a)
      if (a != b) out.rates(a, b) = std::max(out.flow(a, b), 0.0) / out.probs(b);
  }
  return out;
}

std::vector<int> BranchTree::leaves() const {
  std::vector<int> out;
  for (const auto& n : nodes)
    if (n.children.empty()) out.push_back(n.id);
  return out;
}

int BranchTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

DensityMatrix BranchTree::unconditioned(int depth) const {
  const auto dim = nodes.front().state.size();
  DensityMatrix rho = DensityMatrix::Zero(dim, dim);
  for (const auto& n : nodes)
    if (n.depth == depth) rho.noalias() += n.state * n.state.adjoint();
  return rho;
}

std::vector<BranchNode> branch_children(const BranchNode& parent, const InteractionStep& step, double prune) {
  const KrausSet raw = kraus_from_interaction(step);
  const Ket m0 = parent.state / std::sqrt(parent.prob);
  const KrausSet fixed = orthogonality_fix(raw, m0);
  std::vector<BranchNode> children;
  for (std::size_t a = 0; a < fixed.ops.size(); ++a) {
    BranchNode child;
    child.parent = parent.id;
    child.depth = parent.depth + 1;
    child.label = parent.label;
    child.label.push_back(static_cast<int>(a));
    child.state = fixed.ops[a] * parent.state;
    child.prob = child.state.squaredNorm();
    if (child.prob < prune) continue;
    children.push_back(std::move(child));
  }
  return children;
}

namespace {

int pick(const std::vector<double>& weights, double total, SplitMix64& rng) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

TickerTapeResult run_ticker_tape(const Ket& m0, const std::vector<InteractionStep>& steps, std::uint64_t seed) {
  TickerTapeResult out;
  BranchNode root;
  root.state = m0.normalized();
  root.prob = 1.0;
  out.tree.nodes.push_back(root);
  std::vector<int> frontier{0};
  for (const auto& step : steps) {
    std::vector<int> next;
    for (int id : frontier) {
      auto children = branch_children(out.tree.nodes[static_cast<std::size_t>(id)], step);
      for (auto& c : children) {
        c.id = static_cast<int>(out.tree.nodes.size());
        out.tree.nodes[static_cast<std::size_t>(id)].children.push_back(c.id);
        next.push_back(c.id);
        out.tree.nodes.push_back(std::move(c));
      }
    }
    frontier = std::move(next);
  }

  SplitMix64 rng = stream(seed, 0);
  int current = 0;
  out.trajectory.push_back(current);
  while (!out.tree.nodes[static_cast<std::size_t>(current)].children.empty()) {
    const auto& node = out.tree.nodes[static_cast<std::size_t>(current)];
    std::vector<double> w;
    for (int c : node.children) w.push_back(out.tree.nodes[static_cast<std::size_t>(c)].prob);
    current = node.children[static_cast<std::size_t>(pick(w, std::accumulate(w.begin(), w.end(), 0.0), rng))];
    out.trajectory.push_back(current);
  }
  return out;
}

SampledHistory sample_history(const Ket& m0, const std::vector<InteractionStep>& steps, SplitMix64& rng) {
  SampledHistory out;
  BranchNode node;
  node.state = m0.normalized();
  node.prob = 1.0;
  for (const auto& step : steps) {
    auto children = branch_children(node, step);
    std::vector<double> w;
    for (const auto& c : children) w.push_back(c.prob);
    const int k = pick(w, std::accumulate(w.begin(), w.end(), 0.0), rng);
    node = std::move(children[static_cast<std::size_t>(k)]);
    out.outcomes.push_back(node.label.back());
    out.probs.push_back(node.prob);
  }
  out.state = node.state / std::sqrt(node.prob);
  return out;
}

SectorReport branch_schmidt_check(const Ket& psi, const Operator& h_int, const CompositeSpace& space,
                                  const std::vector<std::vector<int>>& sectors, double threshold, double hbar) {
  if (space.factors() != 2) throw ValidationError("branch-Schmidt check needs a two-factor space");
  const int dm = space.dim(0);
  const int de = space.dim(1);
  if (h_int.rows() != space.total_dim()) throw ValidationError("interaction Hamiltonian dimension mismatch");
  std::vector<int> owner(static_cast<std::size_t>(de), -1);
  for (std::size_t u = 0; u < sectors.size(); ++u)
    for (int k : sectors[u]) {
      if (k < 0 || k >= de) throw ValidationError("sector index out of range");
      if (owner[static_cast<std::size_t>(k)] != -1) throw ValidationError("sectors overlap");
      owner[static_cast<std::size_t>(k)] = static_cast<int>(u);
    }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end())
    throw ValidationError("sectors do not cover the environment basis");

  SectorReport rep;
  rep.threshold = threshold;
  for (int k = 0; k < de; ++k)
    for (int l = 0; l < de; ++l) {
      if (owner[static_cast<std::size_t>(k)] == owner[static_cast<std::size_t>(l)]) continue;
      double frob2 = 0.0;
      for (int i = 0; i < dm; ++i)
        for (int j = 0; j < dm; ++j) frob2 += std::norm(h_int(i * de + k, j * de + l));
      rep.max_cross_coupling = std::max(rep.max_cross_coupling, std::sqrt(frob2) / hbar);
    }

  struct Component {
    int sector;
    Ket vec;  // weighted product state
  };
  std::vector<Component> comps;
  for (std::size_t u = 0; u < sectors.size(); ++u) {
    Ket part = Ket::Zero(psi.size());
    for (int i = 0; i < dm; ++i)
      for (int k : sectors[u]) part(i * de + k) = psi(i * de + k);
    rep.sector_probs.push_back(part.squaredNorm());
    auto decomposition = hilbert::schmidt_decompose(part, space);
    for (const auto& t : decomposition.terms)
      if (t.coeff > 1e-14) comps.push_back({static_cast<int>(u), t.coeff * hilbert::tensor(t.left, t.right)});
    rep.branches.push_back(std::move(decomposition));
  }
  for (std::size_t a = 0; a < comps.size(); ++a) {
    const Ket ha = h_int * comps[a].vec;
    for (std::size_t b = 0; b < comps.size(); ++b) {
      if (comps[a].sector == comps[b].sector) continue;
      const cplx h_ba = comps[b].vec.dot(ha);
      // omega_ba - omega_ab = 2 Im(h_ba) / hbar for Hermitian H_I
      rep.max_inter_sector_flow = std::max(rep.max_inter_sector_flow, std::abs(2.0 * h_ba.imag() / hbar));
    }
  }
  rep.passes = rep.max_cross_coupling < threshold;
  return rep;
}

Ket evolve_exact(const Operator& h, const Ket& psi, double t, double hbar) {
  const auto eig = hilbert::eig_hermitian(h, 1e-10);
  const Eigen::VectorXcd phases = (-I * eig.values.cast<cplx>() * (t / hbar)).array().exp();
  return eig.vectors * (phases.asDiagonal() * (eig.vectors.adjoint() * psi));
}

std::vector<FlowSample> eigenvalue_flow(const Ket& psi0, const Operator& h_total, const Operator& h_int,
                                        const CompositeSpace& space, const FlowOptions& options, SplitMix64* rng) {
  if (options.n_sub <= 0 || !(options.t_final > 0.0)) throw ValidationError("eigenvalue flow: bad time grid");
  const double dt = options.t_final / options.n_sub;
  const auto eig = hilbert::eig_hermitian(h_total, 1e-10);
  const Eigen::VectorXcd step_phase = (-I * eig.values.cast<cplx>() * (dt / options.hbar)).array().exp();
  const Operator propagator = eig.vectors * step_phase.asDiagonal() * eig.vectors.adjoint();

  std::vector<FlowSample> out;
  Ket psi = psi0;
  int occupied = 0;
  Ket occupied_vec = hilbert::schmidt_decompose(psi, space).terms.front().left;
  for (int s = 0; s <= options.n_sub; ++s) {
    const auto rm = schmidt_rate_matrix(psi, h_int, space, options.hbar);
    if (rng != nullptr && s > 0) {
      // re-identify the occupied component by overlap with its previous vector
      const auto schmidt = hilbert::schmidt_decompose(psi, space);
      double best = -1.0;
      for (std::size_t a = 0; a < schmidt.terms.size(); ++a) {
        const double ov = std::abs(occupied_vec.dot(schmidt.terms[a].left));
        if (ov > best) {
          best = ov;
          occupied = static_cast<int>(a);
        }
      }
      std::vector<double> w;
      double total = 0.0;
      for (Eigen::Index a = 0; a < rm.rates.rows(); ++a) {
        const double r = (a == occupied) ? 0.0 : rm.rates(a, occupied) * dt;
        w.push_back(r);
        total += r;
      }
      if (rng->uniform() < total) occupied = pick(w, total, *rng);
      occupied_vec = schmidt.terms[static_cast<std::size_t>(occupied)].left;
    }
    out.push_back({s * dt, rm.probs, occupied});
    if (s < options.n_sub) psi = propagator * psi;
  }
  return out;
}

}  // namespace qunravel::discrete

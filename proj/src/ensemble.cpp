#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qunravel/born_unravel.hpp"

namespace qunravel::born {

namespace {

// Neumaier-compensated running sum over a flat array of doubles.
struct CompensatedArray {
  std::vector<double> sum;
  std::vector<double> comp;

  explicit CompensatedArray(std::size_t n = 0) : sum(n, 0.0), comp(n, 0.0) {}

  void add(const double* x, std::size_t n, std::size_t offset = 0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sum[offset + i];
      const double t = s + x[i];
      comp[offset + i] += (std::abs(s) >= std::abs(x[i])) ? (s - t) + x[i] : (x[i] - t) + s;
      sum[offset + i] = t;
    }
  }
  void add(const CompensatedArray& other) {
    add(other.sum.data(), other.sum.size());
    add(other.comp.data(), other.comp.size());
  }
  double value(std::size_t i) const { return sum[i] + comp[i]; }
};

constexpr std::size_t kMomentFields = 6;  // ex, ep, var_x, var_p, ex^2, ep^2

struct BlockResult {
  CompensatedArray rho;      // rows * dim^2 complex entries as doubles
  CompensatedArray moments;  // rows * kMomentFields
  CompensatedArray jump_sq;  // 2
  long jumps = 0;
  double max_norm_error = 0.0;
  bool step_warning = false;
  std::vector<TrajectoryRecord> records;
};

}  // namespace

EnsembleResult ensemble_run(const LindbladModel& model, const Ket& psi0, const EnsembleOptions& options,
                            const Observables* obs) {
  if (options.n_traj < 1) throw ValidationError("n_traj must be at least 1", "numerics.n_traj");
  const auto& topt = options.trajectory;
  if (topt.record_every < 1 || topt.n_steps < 0) throw ValidationError("bad trajectory time grid");
  const std::size_t rows = static_cast<std::size_t>(topt.n_steps / topt.record_every) + 1;
  const auto dim = static_cast<std::size_t>(model.dim());
  const std::size_t rho_len = options.accumulate_rho ? rows * dim * dim * 2 : 0;
  const std::size_t mom_len = obs != nullptr ? rows * kMomentFields : 0;

  const long n_blocks = (options.n_traj + kEnsembleBlock - 1) / kEnsembleBlock;
  std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));

  auto run_block = [&](long b) {
    BlockResult& out = blocks[static_cast<std::size_t>(b)];
    out.rho = CompensatedArray(rho_len);
    out.moments = CompensatedArray(mom_len);
    out.jump_sq = CompensatedArray(2);
    const long first = b * kEnsembleBlock;
    const long last = std::min(options.n_traj, first + kEnsembleBlock);
    for (long i = first; i < last; ++i) {
      SplitMix64 rng = stream(options.seed, static_cast<std::uint64_t>(i));
      RecordCallback cb;
      if (options.accumulate_rho) {
        cb = [&](std::size_t row, const Ket& psi) {
          const DensityMatrix proj = psi * psi.adjoint();
          const std::size_t n = dim * dim * 2;
          out.rho.add(reinterpret_cast<const double*>(proj.data()), n, row * n);
        };
      }
      TrajectoryRecord rec = run_trajectory(model, psi0, options.scheme, topt, rng, obs, cb);
      rec.seed = options.seed;
      rec.index = static_cast<std::uint64_t>(i);
      if (obs != nullptr) {
        std::vector<double> m(mom_len);
        for (std::size_t r = 0; r < rows; ++r) {
          const auto& row = rec.rows[r];
          double* f = &m[r * kMomentFields];
          f[0] = row.ex;
          f[1] = row.ep;
          f[2] = row.var_x;
          f[3] = row.var_p;
          f[4] = row.ex * row.ex;
          f[5] = row.ep * row.ep;
        }
        out.moments.add(m.data(), m.size());
      }
      const double jsq[2] = {rec.jump_sq_dx, rec.jump_sq_dp};
      out.jump_sq.add(jsq, 2);
      out.jumps += static_cast<long>(rec.jumps.size());
      out.max_norm_error = std::max(out.max_norm_error, rec.max_norm_error);
      out.step_warning = out.step_warning || rec.step_warning;
      if (i < options.keep_records) out.records.push_back(std::move(rec));
    }
  };

  const int workers = std::max(1, std::min<int>(options.threads, static_cast<int>(n_blocks)));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (long b = next++; b < n_blocks; b = next++) {
      try {
        run_block(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_blocks;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  BlockResult total;
  total.rho = CompensatedArray(rho_len);
  total.moments = CompensatedArray(mom_len);
  total.jump_sq = CompensatedArray(2);
  EnsembleResult res;
  for (auto& b : blocks) {
    total.rho.add(b.rho);
    total.moments.add(b.moments);
    total.jump_sq.add(b.jump_sq);
    res.total_jumps += b.jumps;
    res.max_norm_error = std::max(res.max_norm_error, b.max_norm_error);
    res.step_warning = res.step_warning || b.step_warning;
    for (auto& r : b.records) res.records.push_back(std::move(r));
  }

  const double n = static_cast<double>(options.n_traj);
  for (std::size_t r = 0; r < rows; ++r) res.times.push_back(static_cast<double>(r * topt.record_every) * topt.dt);
  if (options.accumulate_rho) {
    const std::size_t len = dim * dim * 2;
    for (std::size_t r = 0; r < rows; ++r) {
      DensityMatrix rho(dim, dim);
      auto* raw = reinterpret_cast<double*>(rho.data());
      for (std::size_t e = 0; e < len; ++e) raw[e] = total.rho.value(r * len + e) / n;
      res.rho.push_back(0.5 * (rho + rho.adjoint()));
    }
  }
  if (obs != nullptr) {
    const double bessel = options.n_traj > 1 ? n / (n - 1.0) : 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      auto f = [&](std::size_t k) { return total.moments.value(r * kMomentFields + k) / n; };
      EnsembleSample s;
      s.t = res.times[r];
      s.mean_ex = f(0);
      s.mean_ep = f(1);
      s.mean_var_x = f(2);
      s.mean_var_p = f(3);
      s.var_ex = std::max(0.0, (f(4) - s.mean_ex * s.mean_ex) * bessel);
      s.var_ep = std::max(0.0, (f(5) - s.mean_ep * s.mean_ep) * bessel);
      res.moments.push_back(s);
    }
  }
  const double t_final = static_cast<double>(topt.n_steps) * topt.dt;
  if (t_final > 0.0) {
    res.mean_jump_sq_dx_rate = total.jump_sq.value(0) / n / t_final;
    res.mean_jump_sq_dp_rate = total.jump_sq.value(1) / n / t_final;
  }
  return res;
}

}  // namespace qunravel::born

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qunravel/born_unravel.hpp"
#include "qunravel/config.hpp"
#include "qunravel/lindblad.hpp"
#include "qunravel/output.hpp"

namespace qunravel::cli {

std::string code_version();

struct RunOptions {
  int threads = 1;
  std::optional<std::string> out_dir;  // overrides output.directory
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;  // SHA-256 of the canonical config
  std::uint64_t seed = 0;
  std::string code_version;
  std::string rng;
  int threads = 1;
  std::string start_time, end_time;  // UTC, ISO 8601
  std::vector<io::OutputFile> files;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Quantum model, initial state and the two observables reported in the
/// x/p columns (σ_x/σ_y for qubits, ladder quadratures for random models,
/// position/momentum for the grid particle).
struct QuantumSetup {
  LindbladModel model;
  Ket psi0;
  born::Observables obs;
  std::optional<QBMModel> qbm;
};

QuantumSetup make_quantum_setup(const Block& model, const Block& numerics);
QBMParams qbm_params(const Block& model);
PotentialSpec potential_from(const Block& potential, double mass);

/// Runs the experiment, writes its outputs and `manifest.json`.
/// ValidationError and NumericalContractError propagate.
RunManifest run(const RunConfig& config, const RunOptions& options = {});

/// SIM_THREADS if set and positive, else the hardware concurrency (at least 1).
int threads_from_env();

}  // namespace qunravel::cli

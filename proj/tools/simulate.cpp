#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qunravel/config.hpp"
#include "qunravel/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Open-system unravelling simulator"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--set", overrides, "Override a dotted config path, e.g. numerics.dt=1e-4");
  CLI11_PARSE(app, argc, argv);

  using namespace qunravel;
  try {
    nlohmann::json doc = cli::load_json_file(config_path);
    for (const auto& o : overrides) cli::apply_override(doc, o);
    if (seed) doc["seed"] = *seed;
    const cli::RunConfig cfg = cli::parse_config_json(doc);
    cli::RunOptions opts;
    opts.threads = cli::threads_from_env();
    opts.out_dir = out_dir;
    const cli::RunManifest man = cli::run(cfg, opts);
    for (const auto& w : man.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << man.experiment << ": wrote " << man.files.size() << " files (config " << man.config_hash.substr(0, 12)
              << ")\n";
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalContractError& e) {
    std::cerr << "numerical contract violated: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "qunravel/core.hpp"

namespace qunravel::cli {

enum class Experiment { master, born, qsd, ticker_tape, kicked_rotor, langevin, bridge, scales };

std::string experiment_name(Experiment e);
Experiment parse_experiment(const std::string& name);

/// A validated config block with every default filled in.
class Block {
 public:
  Block() = default;
  Block(std::string path, nlohmann::json values) : path_(std::move(path)), values_(std::move(values)) {}

  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;
  Block sub(const std::string& key) const;
  bool has(const std::string& key) const { return values_.contains(key); }

  const nlohmann::json& json() const { return values_; }
  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& at(const std::string& key) const;
  std::string path_;
  nlohmann::json values_ = nlohmann::json::object();
};

struct RunConfig {
  Experiment experiment = Experiment::master;
  std::uint64_t seed = 0;
  Block model;
  Block numerics;
  Block output;

  nlohmann::json to_json() const;
  /// Compact serialization with sorted keys; the config hash is taken over it.
  std::string canonical() const;
  bool operator==(const RunConfig& other) const { return canonical() == other.canonical(); }
};

/// Throws ValidationError naming the offending key path.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& doc);

/// Applies "a.b.c=value" to a raw config document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

nlohmann::json load_json_file(const std::string& path);

}  // namespace qunravel::cli

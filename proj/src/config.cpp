#include "qunravel/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace qunravel::cli {

using nlohmann::json;

namespace {

enum class Kind { number, integer, boolean, string, numbers, strings, object };
enum class Rule { any, positive, nonnegative, probability, open_unit, at_least_1, at_least_2, at_least_16 };

struct Field {
  const char* key;
  Kind kind;
  Rule rule;
  json def;
};

const std::vector<std::pair<std::string, Experiment>>& experiments() {
  static const std::vector<std::pair<std::string, Experiment>> table = {
      {"master", Experiment::master},       {"born", Experiment::born},
      {"qsd", Experiment::qsd},             {"ticker_tape", Experiment::ticker_tape},
      {"kicked_rotor", Experiment::kicked_rotor}, {"langevin", Experiment::langevin},
      {"bridge", Experiment::bridge},       {"scales", Experiment::scales}};
  return table;
}

const std::vector<Field> kCommonModel = {
    {"type", Kind::string, Rule::any, nullptr},
    {"hbar", Kind::number, Rule::positive, 1.0},
    {"kB", Kind::number, Rule::positive, 1.0},
};

const std::vector<Field>& model_fields(const std::string& type) {
  static const std::vector<Field> qubit = {
      {"gamma", Kind::number, Rule::positive, 1.0},
      {"omega", Kind::number, Rule::any, 0.0},
  };
  static const std::vector<Field> random = {
      {"dim", Kind::integer, Rule::at_least_2, 8},
      {"n_lindblads", Kind::integer, Rule::at_least_1, 2},
      {"rate", Kind::number, Rule::positive, 1.0},
      {"model_seed", Kind::integer, Rule::nonnegative, 1},
  };
  static const std::vector<Field> qbm = {
      {"m", Kind::number, Rule::positive, 1.0},
      {"T", Kind::number, Rule::positive, 0.25},
      {"gamma", Kind::number, Rule::positive, 1.0},
      {"caldeira_leggett", Kind::boolean, Rule::any, false},
      {"potential", Kind::object, Rule::any, json::object()},
      {"x0", Kind::number, Rule::any, 0.0},
      {"p0", Kind::number, Rule::any, 0.0},
      {"initial_width", Kind::number, Rule::nonnegative, 0.0},
  };
  static const std::vector<Field> measurement = {
      {"c1_sq", Kind::number, Rule::open_unit, 0.3},
      {"steps", Kind::integer, Rule::at_least_1, 1},
      {"strength", Kind::number, Rule::probability, 1.0},
  };
  static const std::vector<Field> rotor = {
      {"kick", Kind::number, Rule::nonnegative, 10.0},
      {"inertia", Kind::number, Rule::positive, 1.0},
      {"period", Kind::number, Rule::positive, 1.0},
      {"dim", Kind::integer, Rule::at_least_2, 201},
      {"theta0", Kind::number, Rule::any, 2.0},
      {"l0", Kind::number, Rule::any, 0.0},
      {"width", Kind::number, Rule::positive, 0.25},
      {"kicks", Kind::integer, Rule::at_least_1, 6},
  };
  static const std::vector<Field> langevin = {
      {"m", Kind::number, Rule::positive, 1.0},
      {"T", Kind::number, Rule::positive, 0.25},
      {"gamma", Kind::number, Rule::positive, 1.0},
      {"potential", Kind::object, Rule::any, json::object()},
      {"x0", Kind::number, Rule::any, 0.0},
      {"p0", Kind::number, Rule::any, 0.0},
      {"sd_x", Kind::number, Rule::nonnegative, 0.0},
      {"sd_p", Kind::number, Rule::nonnegative, 0.0},
      {"x_noise", Kind::number, Rule::nonnegative, 0.0},
  };
  static const std::vector<Field> scales = {
      {"lambda", Kind::number, Rule::positive, 0.01},
      {"action_ratio", Kind::number, Rule::positive, 1e58},
      {"m", Kind::number, Rule::positive, 1.0},
      {"T", Kind::number, Rule::positive, 1.0},
      {"gamma", Kind::number, Rule::positive, 1.0},
  };
  if (type == "qubit_damping" || type == "qubit_dephasing") return qubit;
  if (type == "random") return random;
  if (type == "qbm") return qbm;
  if (type == "measurement") return measurement;
  if (type == "rotor") return rotor;
  if (type == "langevin") return langevin;
  if (type == "scales") return scales;
  throw ValidationError("unknown model type '" + type + "'", "model.type");
}

const std::vector<Field> kPotential = {
    {"name", Kind::string, Rule::any, "free"},
    {"omega", Kind::number, Rule::positive, 1.0},
    {"a", Kind::number, Rule::positive, 1.0},
    {"b", Kind::number, Rule::positive, 1.0},
    {"v0", Kind::number, Rule::any, 1.0},
    {"q", Kind::number, Rule::positive, 1.0},
};

const std::vector<Field> kNumerics = {
    {"dt", Kind::number, Rule::positive, 1e-3},
    {"t_final", Kind::number, Rule::positive, 1.0},
    {"n_traj", Kind::integer, Rule::at_least_1, 100},
    {"record_every", Kind::integer, Rule::at_least_1, 10},
    {"grid_n", Kind::integer, Rule::at_least_16, 64},
    {"grid_length", Kind::number, Rule::positive, 20.0},
    {"trace_distance_tol", Kind::number, Rule::positive, 0.05},
    {"master_oracle", Kind::boolean, Rule::any, true},
    {"sector_coupling_threshold", Kind::number, Rule::positive, 1e-6},
    {"n_samples", Kind::integer, Rule::at_least_2, 10000},
    {"lyapunov_steps", Kind::integer, Rule::at_least_1, 1000},
    {"lyapunov_samples", Kind::integer, Rule::at_least_1, 50},
    {"phase_grid_n", Kind::integer, Rule::at_least_16, 64},
    {"bridge_tolerance", Kind::number, Rule::positive, 0.15},
};

const std::vector<Field> kOutput = {
    {"directory", Kind::string, Rule::any, "out"},
    {"formats", Kind::strings, Rule::any, json::array({"csv", "ndjson"})},
    {"dump_times", Kind::numbers, Rule::nonnegative, json::array()},
    {"trajectories", Kind::integer, Rule::nonnegative, 1},
};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_rule(const std::string& where, Rule rule, double v) {
  if (!std::isfinite(v)) throw ValidationError("must be a finite number", where);
  switch (rule) {
    case Rule::any: return;
    case Rule::positive:
      if (!(v > 0.0)) throw ValidationError("must be positive", where);
      return;
    case Rule::nonnegative:
      if (!(v >= 0.0)) throw ValidationError("must be nonnegative", where);
      return;
    case Rule::probability:
      if (!(v > 0.0 && v <= 1.0)) throw ValidationError("must lie in (0, 1]", where);
      return;
    case Rule::open_unit:
      if (!(v > 0.0 && v < 1.0)) throw ValidationError("must lie in (0, 1)", where);
      return;
    case Rule::at_least_1:
      if (v < 1) throw ValidationError("must be at least 1", where);
      return;
    case Rule::at_least_2:
      if (v < 2) throw ValidationError("must be at least 2", where);
      return;
    case Rule::at_least_16:
      if (v < 16) throw ValidationError("must be at least 16", where);
      return;
  }
}

json check_value(const std::string& where, const Field& f, const json& v) {
  switch (f.kind) {
    case Kind::number:
      if (!v.is_number()) throw ValidationError("expected a number", where);
      check_rule(where, f.rule, v.get<double>());
      return v.get<double>();
    case Kind::integer:
      if (!v.is_number_integer()) throw ValidationError("expected an integer", where);
      check_rule(where, f.rule, static_cast<double>(v.get<long long>()));
      return v;
    case Kind::boolean:
      if (!v.is_boolean()) throw ValidationError("expected true or false", where);
      return v;
    case Kind::string:
      if (!v.is_string()) throw ValidationError("expected a string", where);
      return v;
    case Kind::numbers:
      if (!v.is_array()) throw ValidationError("expected an array of numbers", where);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ValidationError("expected a number", where + "[" + std::to_string(i) + "]");
        check_rule(where + "[" + std::to_string(i) + "]", f.rule, v[i].get<double>());
      }
      return v;
    case Kind::strings:
      if (!v.is_array()) throw ValidationError("expected an array of strings", where);
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!v[i].is_string()) throw ValidationError("expected a string", where + "[" + std::to_string(i) + "]");
      return v;
    case Kind::object:
      if (!v.is_object()) throw ValidationError("expected an object", where);
      return v;
  }
  return v;
}

json normalize(const std::string& path, const json& in, const std::vector<const std::vector<Field>*>& tables) {
  if (!in.is_object()) throw ValidationError("expected an object", path);
  std::set<std::string> known;
  json out = json::object();
  for (const auto* table : tables)
    for (const auto& f : *table) {
      known.insert(f.key);
      const std::string where = join(path, f.key);
      if (in.contains(f.key)) {
        out[f.key] = check_value(where, f, in.at(f.key));
      } else if (f.def.is_null()) {
        throw ValidationError("required key is missing", where);
      } else {
        out[f.key] = f.def;
      }
    }
  for (const auto& [key, value] : in.items())
    if (!known.count(key)) throw ValidationError("unknown key", join(path, key));
  return out;
}

json normalize_potential(const std::string& path, const json& in) {
  json out = normalize(path, in, {&kPotential});
  const std::string name = out["name"];
  if (name != "free" && name != "harmonic" && name != "double_well" && name != "cosine")
    throw ValidationError("unknown potential '" + name + "'", join(path, "name"));
  return out;
}

bool model_allowed(Experiment e, const std::string& type) {
  switch (e) {
    case Experiment::master:
    case Experiment::born:
    case Experiment::qsd:
      return type == "qubit_damping" || type == "qubit_dephasing" || type == "random" || type == "qbm";
    case Experiment::ticker_tape: return type == "measurement";
    case Experiment::kicked_rotor: return type == "rotor";
    case Experiment::langevin: return type == "langevin";
    case Experiment::bridge: return type == "qbm";
    case Experiment::scales: return type == "scales";
  }
  return false;
}

}  // namespace

std::string experiment_name(Experiment e) {
  for (const auto& [name, value] : experiments())
    if (value == e) return name;
  return "master";
}

Experiment parse_experiment(const std::string& name) {
  for (const auto& [n, value] : experiments())
    if (n == name) return value;
  throw ValidationError("unknown experiment '" + name + "'", "experiment");
}

const json& Block::at(const std::string& key) const {
  if (!values_.contains(key)) throw ValidationError("key not present", join(path_, key));
  return values_.at(key);
}

double Block::num(const std::string& key) const { return at(key).get<double>(); }
long Block::integer(const std::string& key) const { return at(key).get<long>(); }
std::uint64_t Block::u64(const std::string& key) const { return at(key).get<std::uint64_t>(); }
bool Block::flag(const std::string& key) const { return at(key).get<bool>(); }
std::string Block::str(const std::string& key) const { return at(key).get<std::string>(); }
std::vector<double> Block::numbers(const std::string& key) const { return at(key).get<std::vector<double>>(); }
std::vector<std::string> Block::strings(const std::string& key) const {
  return at(key).get<std::vector<std::string>>();
}
Block Block::sub(const std::string& key) const { return Block(join(path_, key), at(key)); }

json RunConfig::to_json() const {
  return json{{"experiment", experiment_name(experiment)},
              {"seed", seed},
              {"model", model.json()},
              {"numerics", numerics.json()},
              {"output", output.json()}};
}

std::string RunConfig::canonical() const { return to_json().dump(); }

RunConfig parse_config_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> top = {"experiment", "seed", "model", "numerics", "output"};
  for (const auto& [key, value] : doc.items())
    if (!top.count(key)) throw ValidationError("unknown key", key);
  if (!doc.contains("experiment") || !doc.at("experiment").is_string())
    throw ValidationError("required string key is missing", "experiment");

  RunConfig cfg;
  cfg.experiment = parse_experiment(doc.at("experiment").get<std::string>());
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ValidationError("expected a nonnegative 64-bit integer", "seed");
    cfg.seed = s.get<std::uint64_t>();
  }

  const json model_in = doc.value("model", json::object());
  if (!model_in.is_object()) throw ValidationError("expected an object", "model");
  if (!model_in.contains("type") || !model_in.at("type").is_string())
    throw ValidationError("required key is missing", "model.type");
  const std::string type = model_in.at("type").get<std::string>();
  const auto& fields = model_fields(type);
  if (!model_allowed(cfg.experiment, type))
    throw ValidationError("model type '" + type + "' is not valid for experiment '" +
                              experiment_name(cfg.experiment) + "'",
                          "model.type");
  json model = normalize("model", model_in, {&kCommonModel, &fields});
  if (model.contains("potential")) model["potential"] = normalize_potential("model.potential", model["potential"]);
  cfg.model = Block("model", model);

  cfg.numerics = Block("numerics", normalize("numerics", doc.value("numerics", json::object()), {&kNumerics}));
  json output = normalize("output", doc.value("output", json::object()), {&kOutput});
  for (const auto& f : output["formats"]) {
    const std::string s = f.get<std::string>();
    if (s != "csv" && s != "ndjson") throw ValidationError("unknown format '" + s + "'", "output.formats");
  }
  cfg.output = Block("output", output);

  if (cfg.numerics.integer("record_every") > std::lround(cfg.numerics.num("t_final") / cfg.numerics.num("dt")))
    throw ValidationError("record interval exceeds the run length", "numerics.record_every");
  return cfg;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'", "config");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what(), "config");
  }
}

RunConfig parse_config(const std::string& path) { return parse_config_json(load_json_file(path)); }

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key.path=value", "--set");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ValidationError("empty path component", path);
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ValidationError("cannot descend into a non-object", path);
    node = &next;
  }
  (*node)[parts.back()] = value;
}

}  // namespace qunravel::cli

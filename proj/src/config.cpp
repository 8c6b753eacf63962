#include "tailsgd/config.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "tailsgd/rng.hpp"

namespace tailsgd {

namespace {

using nlohmann::json;

bool is_known_experiment(const std::string& e) {
  return e == "figure-a" || e == "figure-grid" || e == "rates" ||
         e == "verify-filters" || e == "probe";
}

double require_number(const json& v, const std::string& key) {
  if (!v.is_number()) {
    throw ConfigError("config key '" + key + "' must be a number");
  }
  return v.get<double>();
}

long require_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) {
    throw ConfigError("config key '" + key + "' must be an integer");
  }
  return v.get<long>();
}

std::uint64_t require_uint64(const json& v, const std::string& key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<double> require_number_array(const json& v, const std::string& key) {
  if (!v.is_array()) {
    throw ConfigError("config key '" + key + "' must be an array of numbers");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ConfigError("config key '" + key + "' must contain only numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<long> require_integer_array(const json& v, const std::string& key) {
  if (!v.is_array()) {
    throw ConfigError("config key '" + key + "' must be an array of integers");
  }
  std::vector<long> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number_integer()) {
      throw ConfigError("config key '" + key + "' must contain only integers");
    }
    out.push_back(e.get<long>());
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!is_known_experiment(experiment)) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  if (d < 1) throw ConfigError("d must be >= 1");
  if (n < 2) throw ConfigError("n must be >= 2");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be > 0");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("noise_std must be >= 0");
  }
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("r must be >= 0");
  if (variant != 'a' && variant != 'b' && variant != 'c') {
    throw ConfigError("variant must be one of a, b, c");
  }
  if (probe_configs < 1) throw ConfigError("probe_configs must be >= 1");

  if (experiment == "figure-a" && r_grid.empty()) {
    throw ConfigError("figure-a needs a non-empty r_grid");
  }
  for (double rv : r_grid) {
    if (!(rv >= 0.0) || !std::isfinite(rv)) {
      throw ConfigError("r_grid entries must be >= 0");
    }
  }
  if (experiment == "figure-grid") {
    if (gamma_grid.empty()) throw ConfigError("figure-grid needs gamma_grid");
    if (b_grid.empty()) throw ConfigError("figure-grid needs b_grid");
  }
  for (double g : gamma_grid) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw ConfigError("gamma_grid entries must be > 0");
    }
  }
  for (long b : b_grid) {
    if (b < 1) throw ConfigError("b_grid entries must be >= 1");
  }
  if (experiment == "rates") {
    if (n_ladder.empty()) throw ConfigError("rates needs a non-empty n_ladder");
    for (long nn : n_ladder) {
      if (nn < 2) throw ConfigError("n_ladder entries must be >= 2");
    }
  }
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["experiment"] = experiment;
  j["d"] = d;
  j["n"] = n;
  j["nu"] = nu;
  j["noise_std"] = noise_std;
  j["master_seed"] = master_seed;
  j["replicates"] = replicates;
  j["r_grid"] = r_grid;
  j["r"] = r;
  j["gamma_grid"] = gamma_grid;
  j["b_grid"] = b_grid;
  j["n_ladder"] = n_ladder;
  j["variant"] = std::string(1, variant);
  j["probe_configs"] = probe_configs;
  // nlohmann::json object keys are stored sorted, so dump() is canonical.
  return j.dump();
}

std::uint64_t ExperimentConfig::config_hash() const {
  return fnv1a64(canonical_json());
}

ExperimentConfig default_config(const std::string& experiment) {
  if (!is_known_experiment(experiment)) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "figure-a") {
    c.r_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
  } else if (experiment == "figure-grid") {
    c.gamma_grid = {0.002, 0.008, 0.032, 0.128, 0.512};
    c.b_grid = {1, 4, 16, 64};
  } else if (experiment == "rates") {
    c.n_ladder = {500, 1000, 2000, 4000, 8000};
  }
  return c;
}

ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& experiment) {
  ExperimentConfig c = default_config(experiment);
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config root must be a JSON object");
  }

  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") {
      if (!value.is_string()) throw ConfigError("'experiment' must be a string");
      if (value.get<std::string>() != experiment) {
        throw ConfigError("config 'experiment' does not match the subcommand");
      }
    } else if (key == "d") {
      c.d = require_integer(value, key);
    } else if (key == "n") {
      c.n = require_integer(value, key);
    } else if (key == "nu") {
      c.nu = require_number(value, key);
    } else if (key == "noise_std") {
      c.noise_std = require_number(value, key);
    } else if (key == "master_seed") {
      c.master_seed = require_uint64(value, key);
    } else if (key == "replicates") {
      c.replicates = require_integer(value, key);
    } else if (key == "r_grid") {
      c.r_grid = require_number_array(value, key);
    } else if (key == "r") {
      c.r = require_number(value, key);
    } else if (key == "gamma_grid") {
      c.gamma_grid = require_number_array(value, key);
    } else if (key == "b_grid") {
      c.b_grid = require_integer_array(value, key);
    } else if (key == "n_ladder") {
      c.n_ladder = require_integer_array(value, key);
    } else if (key == "variant") {
      if (!value.is_string() || value.get<std::string>().size() != 1) {
        throw ConfigError("'variant' must be a one-character string");
      }
      c.variant = value.get<std::string>()[0];
    } else if (key == "probe_configs") {
      c.probe_configs = require_integer(value, key);
    } else if (key == "output_path") {
      if (!value.is_string()) throw ConfigError("'output_path' must be a string");
      c.output_path = value.get<std::string>();
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  c.validate();
  return c;
}

}  // namespace tailsgd

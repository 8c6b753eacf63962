#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tailsgd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One flat configuration struct shared by every experiment; each experiment
// reads only the fields it documents. parse_config rejects unknown keys and
// wrong JSON types so typos fail loudly instead of silently using defaults.
struct ExperimentConfig {
  std::string experiment;

  long d = 100;
  long n = 2000;
  double nu = 0.5;
  double noise_std = 1.0;
  std::uint64_t master_seed = 12345;
  long replicates = 20;

  std::vector<double> r_grid;       // figure-a
  double r = 0.5;                   // figure-grid, rates
  std::vector<double> gamma_grid;   // figure-grid
  std::vector<long> b_grid;         // figure-grid
  std::vector<long> n_ladder;       // rates
  char variant = 'a';               // rates
  long probe_configs = 10;          // probe

  std::string output_path;

  void validate() const;

  // Canonical serialized form (sorted keys, shortest numbers) and its hash;
  // both are embedded in result files so outputs are traceable to inputs.
  std::string canonical_json() const;
  std::uint64_t config_hash() const;
};

ExperimentConfig default_config(const std::string& experiment);

// Parses overrides from json_text on top of default_config(experiment).
ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& experiment);

}  // namespace tailsgd

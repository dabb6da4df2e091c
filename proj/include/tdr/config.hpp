#pragma once

// Experiment configuration files: one `key = value` per line, `#` starts a
// comment. Values are JSON literals (numbers, booleans, arrays, strings);
// a value that is not valid JSON is taken as a bare string.

#include <stdexcept>
#include <string>

#include "tdr/experiment.hpp"

namespace tdr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConfigError for syntax errors, unknown keys, wrongly typed values
/// and settings rejected by ExperimentConfig::validate.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// lo, lo + step, ..., hi with `count` points.
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace tdr

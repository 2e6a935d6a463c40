#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "refract/levy_model.hpp"
#include "refract/numerics.hpp"

namespace refract {

// Evaluation grid for the value table. When the config leaves it out the
// solve command derives a range from the computed thresholds.
struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;
};

// Monte Carlo controls for the compare-mc command.
struct McSpec {
  long paths = 100000;
  int steps_per_interarrival = 100;
  std::uint64_t seed = 1;
  bool gaussian_increments = false;
  // Opportunity counts simulated with the random horizon, one row each.
  std::vector<int> m_list{1, 2, 3, 4, 5};
  // Also simulate the deterministic horizon delta as a final row.
  bool const_row = true;
};

struct OutputSpec {
  std::string dir = ".";
  std::string thresholds = "thresholds.csv";
  std::string values = "values.csv";
  std::string compare = "compare.csv";
  std::string summary = "summary.json";
};

// Fully resolved problem description. load_config() fills this from JSON;
// when the model block gives gamma instead of drift_tilde the drift is
// calibrated during loading, so downstream code never sees the difference.
struct ProblemConfig {
  LevyModel model;
  double K = 100.0;
  double alpha_rate = 0.0;
  double delta = 1.0;
  int N = 1;
  int M = 1;
  Tolerances tol;
  std::optional<GridSpec> grid;
  McSpec mc;
  OutputSpec outputs;
};

// Reads a JSON config file. A summary.json written by the solve command is
// also accepted; its result block is ignored. Throws ConfigError on parse
// failures, missing keys, out-of-range values, and when the model block
// carries both or neither of drift_tilde / gamma.
ProblemConfig load_config(const std::string &path);

// "lo:hi:n" -> GridSpec. Throws ConfigError when malformed or lo >= hi.
GridSpec parse_grid(const std::string &text);

// "1,3,5" -> {1, 3, 5}. Throws ConfigError when malformed or non-positive.
std::vector<int> parse_m_list(const std::string &text);

}  // namespace refract

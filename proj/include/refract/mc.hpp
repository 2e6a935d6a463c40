#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "refract/levy_model.hpp"

namespace refract {

// One stream of randomness per simulated path, derived from (seed, path)
// so results do not depend on how paths are scheduled.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path);

  // Uniform on the open interval (0,1).
  double uniform();
  // Exponential with the given rate.
  double exponential(double rate);
  // Standard normal (Box-Muller, one spare cached).
  double normal();
  // Fair coin, +1 or -1.
  double sign();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Horizon {
  enum class Kind { Erlang, Constant };
  Kind kind = Kind::Constant;
  int shape = 1;       // Erlang stage count
  double rate = 1.0;   // Erlang stage rate
  double delta = 0.0;  // constant horizon length

  static Horizon erlang(int shape, double rate);
  static Horizon constant(double delta);

  double draw(PathRng &rng) const;
  double mean() const;
};

struct SimulationConfig {
  long paths = 0;
  int steps_per_interarrival = 100;
  std::uint64_t seed = 0;
  Horizon horizon;
  // Replaces the +-1 random-walk increments with exact Gaussian ones.
  bool gaussian_increments = false;

  void validate() const;
};

struct Estimate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double stderr_mean = 0.0;
  long paths_used = 0;
};

// Absorption time of the transient chain: starts in a state drawn from
// alpha (a deficit mass absorbs immediately at time zero), holds
// exponentially in each state, and moves by the embedded transition
// probabilities until absorption.
double sample_phase_type(const PhaseType &jumps, PathRng &rng);

// Terminal value of the process started at x0 and run for horizon_time.
// Jump epochs are Poisson(rho); each inter-arrival stretch of length T is
// crossed in steps_per_interarrival equal sub-steps of drift plus a
// +-sigma*sqrt(dt) random walk (or Gaussian increments when configured),
// and the final stretch before the horizon gets its own sub-step size so
// the process is sampled exactly at the horizon.
double simulate_terminal(const LevyModel &model, double x0,
                         double horizon_time, int steps_per_interarrival,
                         PathRng &rng, bool gaussian_increments = false);

// Monte Carlo estimate of E_x[e^{-alpha_rate * T} value_fn(X_T)] with T
// drawn per the configured horizon. Fixed seed gives a bit-identical
// result: paths use independent substreams and are accumulated in path
// order.
Estimate estimate_expectation(const LevyModel &model,
                              const std::function<double(double)> &value_fn,
                              double x0, double alpha_rate,
                              const SimulationConfig &config);

}  // namespace refract

#include "refract/mc.hpp"

#include <cmath>
#include <limits>

#include "refract/errors.hpp"
#include "refract/numerics.hpp"

namespace refract {

namespace {

std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t path) {
  std::uint64_t state = seed;
  splitmix64(state);
  state ^= path * 0xd6e8feb86659fd93ull;
  engine_.seed(splitmix64(state));
}

double PathRng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::exponential(double rate) {
  return -std::log(uniform()) / rate;
}

double PathRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double r = std::sqrt(-2.0 * std::log(uniform()));
  double theta = 2.0 * M_PI * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double PathRng::sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

Horizon Horizon::erlang(int shape, double rate) {
  Horizon h;
  h.kind = Kind::Erlang;
  h.shape = shape;
  h.rate = rate;
  return h;
}

Horizon Horizon::constant(double delta) {
  Horizon h;
  h.kind = Kind::Constant;
  h.delta = delta;
  return h;
}

double Horizon::draw(PathRng &rng) const {
  if (kind == Kind::Constant) return delta;
  double sum = 0.0;
  for (int k = 0; k < shape; ++k) sum += rng.exponential(rate);
  return sum;
}

double Horizon::mean() const {
  return kind == Kind::Constant ? delta : shape / rate;
}

void SimulationConfig::validate() const {
  if (paths < 1) throw ConfigError("simulation: paths must be >= 1");
  if (steps_per_interarrival < 1) {
    throw ConfigError("simulation: steps per inter-arrival must be >= 1");
  }
  if (horizon.kind == Horizon::Kind::Erlang) {
    if (horizon.shape < 1 || horizon.rate <= 0.0) {
      throw ConfigError("simulation: Erlang horizon needs shape >= 1, rate > 0");
    }
  } else if (horizon.delta < 0.0) {
    throw ConfigError("simulation: constant horizon must be >= 0");
  }
}

double sample_phase_type(const PhaseType &jumps, PathRng &rng) {
  const int d = jumps.dim();
  const Eigen::VectorXd t = jumps.exit_vector();

  double u = rng.uniform();
  int state = -1;
  double cum = 0.0;
  for (int k = 0; k < d; ++k) {
    cum += jumps.alpha(k);
    if (u < cum) {
      state = k;
      break;
    }
  }
  if (state < 0) return 0.0;  // deficit mass: atom at zero

  double time = 0.0;
  while (true) {
    const double total = -jumps.T(state, state);
    time += rng.exponential(total);
    double v = rng.uniform() * total;
    double acc = 0.0;
    int next = -1;
    for (int j = 0; j < d; ++j) {
      if (j == state) continue;
      acc += jumps.T(state, j);
      if (v < acc) {
        next = j;
        break;
      }
    }
    if (next < 0) return time;  // exit rate t(state): absorbed
    state = next;
  }
}

namespace {

void diffuse(const LevyModel &model, double &x, double length, int steps,
             PathRng &rng, bool gaussian) {
  if (length <= 0.0) return;
  const double dt = length / steps;
  const double drift = model.drift_tilde * dt;
  const double vol = model.sigma * std::sqrt(dt);
  for (int k = 0; k < steps; ++k) {
    double shock = 0.0;
    if (model.sigma > 0.0) {
      shock = vol * (gaussian ? rng.normal() : rng.sign());
    }
    x += drift + shock;
  }
}

}  // namespace

double simulate_terminal(const LevyModel &model, double x0,
                         double horizon_time, int steps_per_interarrival,
                         PathRng &rng, bool gaussian_increments) {
  double x = x0;
  double remaining = horizon_time;
  while (remaining > 0.0) {
    const double gap = model.rho > 0.0
                           ? rng.exponential(model.rho)
                           : std::numeric_limits<double>::infinity();
    if (gap >= remaining) {
      diffuse(model, x, remaining, steps_per_interarrival, rng,
              gaussian_increments);
      return x;
    }
    diffuse(model, x, gap, steps_per_interarrival, rng, gaussian_increments);
    x -= sample_phase_type(model.jumps, rng);
    remaining -= gap;
  }
  return x;
}

Estimate estimate_expectation(const LevyModel &model,
                              const std::function<double(double)> &value_fn,
                              double x0, double alpha_rate,
                              const SimulationConfig &config) {
  config.validate();

  KahanSum<double> sum;
  KahanSum<double> sum_sq;
  for (long i = 0; i < config.paths; ++i) {
    PathRng rng(config.seed, static_cast<std::uint64_t>(i));
    const double horizon = config.horizon.draw(rng);
    const double terminal =
        simulate_terminal(model, x0, horizon, config.steps_per_interarrival,
                          rng, config.gaussian_increments);
    const double y = std::exp(-alpha_rate * horizon) * value_fn(terminal);
    sum.add(y);
    sum_sq.add(y * y);
  }

  const double n = static_cast<double>(config.paths);
  Estimate est;
  est.paths_used = config.paths;
  est.mean = sum.value() / n;
  double var = 0.0;
  if (config.paths > 1) {
    var = (sum_sq.value() - n * est.mean * est.mean) / (n - 1.0);
    if (var < 0.0) var = 0.0;
  }
  est.stderr_mean = std::sqrt(var / n);
  est.ci_low = est.mean - 1.96 * est.stderr_mean;
  est.ci_high = est.mean + 1.96 * est.stderr_mean;
  return est;
}

}  // namespace refract

#include "refract/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "refract/errors.hpp"
#include "refract/phase_type.hpp"

namespace refract {
namespace {

using nlohmann::json;

const json &need(const json &block, const char *key, const char *where) {
  auto it = block.find(key);
  if (it == block.end()) {
    throw ConfigError(std::string("config: missing ") + where + "." + key);
  }
  return *it;
}

double need_number(const json &block, const char *key, const char *where) {
  const json &v = need(block, key, where);
  if (!v.is_number()) {
    throw ConfigError(std::string("config: ") + where + "." + key +
                      " must be a number");
  }
  return v.get<double>();
}

int need_int(const json &block, const char *key, const char *where) {
  const json &v = need(block, key, where);
  if (!v.is_number_integer()) {
    throw ConfigError(std::string("config: ") + where + "." + key +
                      " must be an integer");
  }
  return v.get<int>();
}

void take_number(const json &block, const char *key, double &slot) {
  if (auto it = block.find(key); it != block.end()) slot = it->get<double>();
}

void take_int(const json &block, const char *key, int &slot) {
  if (auto it = block.find(key); it != block.end()) slot = it->get<int>();
}

void take_string(const json &block, const char *key, std::string &slot) {
  if (auto it = block.find(key); it != block.end())
    slot = it->get<std::string>();
}

void take_bool(const json &block, const char *key, bool &slot) {
  if (auto it = block.find(key); it != block.end()) slot = it->get<bool>();
}

PhaseType parse_jumps(const json &jumps) {
  const json &ja = need(jumps, "alpha", "model.jumps");
  const json &jt = need(jumps, "T", "model.jumps");
  if (!ja.is_array() || ja.empty()) {
    throw ConfigError("config: model.jumps.alpha must be a nonempty array");
  }
  const int d = static_cast<int>(ja.size());
  Eigen::VectorXd alpha(d);
  for (int i = 0; i < d; ++i) alpha(i) = ja.at(i).get<double>();

  if (!jt.is_array() || static_cast<int>(jt.size()) != d) {
    throw ConfigError("config: model.jumps.T must be a " + std::to_string(d) +
                      "-row matrix matching alpha");
  }
  Eigen::MatrixXd T(d, d);
  for (int i = 0; i < d; ++i) {
    const json &row = jt.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw ConfigError("config: model.jumps.T row " + std::to_string(i) +
                        " must have " + std::to_string(d) + " entries");
    }
    for (int k = 0; k < d; ++k) T(i, k) = row.at(k).get<double>();
  }
  return PhaseType::from_fit(alpha, T);
}

void parse_tolerances(const json &block, Tolerances &tol) {
  take_number(block, "root_residual", tol.root_residual);
  take_number(block, "root_separation", tol.root_separation);
  take_number(block, "real_snap", tol.real_snap);
  take_number(block, "imag_residue", tol.imag_residue);
  take_number(block, "conj_pair", tol.conj_pair);
  take_number(block, "continuity_eps", tol.continuity_eps);
  take_number(block, "continuity_tol", tol.continuity_tol);
  take_number(block, "scalar_root_tol", tol.scalar_root_tol);
  for (double v : {tol.root_residual, tol.root_separation, tol.real_snap,
                   tol.imag_residue, tol.conj_pair, tol.continuity_eps,
                   tol.continuity_tol, tol.scalar_root_tol}) {
    if (!(v > 0.0)) {
      throw ConfigError("config: numerics.tolerances entries must be > 0");
    }
  }
}

GridSpec parse_grid_block(const json &block) {
  GridSpec g;
  g.lo = need_number(block, "lo", "numerics.grid");
  g.hi = need_number(block, "hi", "numerics.grid");
  g.points = need_int(block, "points", "numerics.grid");
  if (!(g.lo < g.hi)) {
    throw ConfigError("config: numerics.grid needs lo < hi");
  }
  if (g.points < 2) {
    throw ConfigError("config: numerics.grid.points must be >= 2");
  }
  return g;
}

void parse_mc(const json &block, McSpec &mc) {
  if (auto it = block.find("paths"); it != block.end())
    mc.paths = it->get<long>();
  take_int(block, "steps_per_interarrival", mc.steps_per_interarrival);
  if (auto it = block.find("seed"); it != block.end())
    mc.seed = it->get<std::uint64_t>();
  take_bool(block, "gaussian_increments", mc.gaussian_increments);
  take_bool(block, "const_row", mc.const_row);
  if (auto it = block.find("m_list"); it != block.end()) {
    if (!it->is_array() || it->empty()) {
      throw ConfigError("config: numerics.mc.m_list must be a nonempty array");
    }
    mc.m_list.clear();
    for (const auto &v : *it) mc.m_list.push_back(v.get<int>());
  }
  if (mc.paths < 1) throw ConfigError("config: numerics.mc.paths must be >= 1");
  if (mc.steps_per_interarrival < 1) {
    throw ConfigError("config: numerics.mc.steps_per_interarrival must be >= 1");
  }
  for (int m : mc.m_list) {
    if (m < 1) throw ConfigError("config: numerics.mc.m_list entries must be >= 1");
  }
}

ProblemConfig from_tree(const json &j) {
  ProblemConfig cfg;

  const json &problem = need(j, "problem", "");
  cfg.K = need_number(problem, "K", "problem");
  cfg.alpha_rate = need_number(problem, "alpha_rate", "problem");
  cfg.delta = need_number(problem, "delta", "problem");
  cfg.N = need_int(problem, "N", "problem");
  cfg.M = need_int(problem, "M", "problem");
  if (!(cfg.K > 0.0)) throw ConfigError("config: problem.K must be > 0");
  if (!(cfg.delta > 0.0)) throw ConfigError("config: problem.delta must be > 0");
  if (cfg.N < 1) throw ConfigError("config: problem.N must be >= 1");
  if (cfg.M < 1) throw ConfigError("config: problem.M must be >= 1");

  const json &model = need(j, "model", "");
  cfg.model.sigma = need_number(model, "sigma", "model");
  cfg.model.rho = need_number(model, "rho", "model");
  cfg.model.jumps = parse_jumps(need(model, "jumps", "model"));
  const bool has_drift = model.contains("drift_tilde");
  const bool has_gamma = model.contains("gamma");
  if (has_drift == has_gamma) {
    throw ConfigError(
        "config: model needs exactly one of drift_tilde or gamma");
  }
  if (has_drift) {
    cfg.model.drift_tilde = model.at("drift_tilde").get<double>();
  } else {
    const double gamma = model.at("gamma").get<double>();
    cfg.model.drift_tilde = calibrate_drift(cfg.model.sigma, cfg.model.rho,
                                            cfg.model.jumps, cfg.alpha_rate,
                                            gamma);
  }
  cfg.model.validate();

  if (auto nit = j.find("numerics"); nit != j.end()) {
    const json &numerics = *nit;
    if (auto it = numerics.find("tolerances"); it != numerics.end()) {
      parse_tolerances(*it, cfg.tol);
    }
    if (auto it = numerics.find("grid"); it != numerics.end()) {
      cfg.grid = parse_grid_block(*it);
    }
    if (auto it = numerics.find("mc"); it != numerics.end()) {
      parse_mc(*it, cfg.mc);
    }
  }

  if (auto oit = j.find("outputs"); oit != j.end()) {
    const json &outputs = *oit;
    take_string(outputs, "dir", cfg.outputs.dir);
    take_string(outputs, "thresholds", cfg.outputs.thresholds);
    take_string(outputs, "values", cfg.outputs.values);
    take_string(outputs, "compare", cfg.outputs.compare);
    take_string(outputs, "summary", cfg.outputs.summary);
  }
  return cfg;
}

}  // namespace

ProblemConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config: ") + path + ": " + e.what());
  }
  try {
    return from_tree(j);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

GridSpec parse_grid(const std::string &text) {
  GridSpec g;
  const char *p = text.data();
  const char *end = p + text.size();
  auto field = [&](double &slot, bool last) {
    auto [next, ec] = std::from_chars(p, end, slot);
    if (ec != std::errc{} || (last ? next != end : (next == end || *next != ':'))) {
      throw ConfigError("grid: expected lo:hi:n, got '" + text + "'");
    }
    p = last ? next : next + 1;
  };
  field(g.lo, false);
  field(g.hi, false);
  double n = 0.0;
  field(n, true);
  g.points = static_cast<int>(n);
  if (g.points != n || g.points < 2) {
    throw ConfigError("grid: point count must be an integer >= 2");
  }
  if (!(g.lo < g.hi)) throw ConfigError("grid: needs lo < hi");
  return g;
}

std::vector<int> parse_m_list(const std::string &text) {
  std::vector<int> out;
  const char *p = text.data();
  const char *end = p + text.size();
  while (p != end) {
    int v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || (next != end && *next != ',') || v < 1) {
      throw ConfigError("m-list: expected comma-separated positive integers, got '" +
                        text + "'");
    }
    out.push_back(v);
    p = (next == end) ? next : next + 1;
  }
  if (out.empty()) throw ConfigError("m-list: empty");
  return out;
}

}  // namespace refract

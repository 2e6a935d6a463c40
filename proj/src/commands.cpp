#include "refract/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "refract/errors.hpp"
#include "refract/mc.hpp"
#include "refract/piecewise.hpp"
#include "refract/recursion.hpp"
#include "refract/spectral.hpp"

namespace refract {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using steady = std::chrono::steady_clock;

double seconds_since(steady::time_point t0) {
  return std::chrono::duration<double>(steady::now() - t0).count();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

fs::path output_path(const ProblemConfig &cfg, const std::string &name) {
  if (cfg.outputs.dir.empty()) return fs::path(name);
  fs::create_directories(cfg.outputs.dir);
  return fs::path(cfg.outputs.dir) / name;
}

std::ofstream open_output(const fs::path &path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("output: cannot open " + path.string());
  return out;
}

void finish_output(std::ofstream &out, const fs::path &path) {
  out.flush();
  if (!out) throw ConfigError("output: write failed for " + path.string());
}

std::vector<double> grid_points(const GridSpec &g) {
  std::vector<double> xs(static_cast<std::size_t>(g.points));
  const double step = (g.hi - g.lo) / (g.points - 1);
  for (int i = 0; i < g.points; ++i) xs[static_cast<std::size_t>(i)] = g.lo + step * i;
  xs.back() = g.hi;
  return xs;
}

// The config blocks of summary.json. Everything here round-trips through
// load_config, with the calibrated drift written in place of gamma.
ordered_json config_tree(const ProblemConfig &cfg,
                         const std::optional<GridSpec> &grid_used) {
  const PhaseType &jumps = cfg.model.jumps;
  ordered_json alpha = ordered_json::array();
  for (int i = 0; i < jumps.dim(); ++i) alpha.push_back(jumps.alpha(i));
  ordered_json T = ordered_json::array();
  for (int i = 0; i < jumps.dim(); ++i) {
    ordered_json row = ordered_json::array();
    for (int k = 0; k < jumps.dim(); ++k) row.push_back(jumps.T(i, k));
    T.push_back(std::move(row));
  }

  ordered_json j;
  j["model"] = {{"sigma", cfg.model.sigma},
                {"rho", cfg.model.rho},
                {"drift_tilde", cfg.model.drift_tilde},
                {"jumps", {{"alpha", std::move(alpha)}, {"T", std::move(T)}}}};
  j["problem"] = {{"K", cfg.K},
                  {"alpha_rate", cfg.alpha_rate},
                  {"delta", cfg.delta},
                  {"N", cfg.N},
                  {"M", cfg.M}};
  j["numerics"]["tolerances"] = {{"root_residual", cfg.tol.root_residual},
                                 {"root_separation", cfg.tol.root_separation},
                                 {"real_snap", cfg.tol.real_snap},
                                 {"imag_residue", cfg.tol.imag_residue},
                                 {"conj_pair", cfg.tol.conj_pair},
                                 {"continuity_eps", cfg.tol.continuity_eps},
                                 {"continuity_tol", cfg.tol.continuity_tol},
                                 {"scalar_root_tol", cfg.tol.scalar_root_tol}};
  if (grid_used) {
    j["numerics"]["grid"] = {{"lo", grid_used->lo},
                             {"hi", grid_used->hi},
                             {"points", grid_used->points}};
  }
  ordered_json m_list = ordered_json::array();
  for (int m : cfg.mc.m_list) m_list.push_back(m);
  j["numerics"]["mc"] = {
      {"paths", cfg.mc.paths},
      {"steps_per_interarrival", cfg.mc.steps_per_interarrival},
      {"seed", cfg.mc.seed},
      {"gaussian_increments", cfg.mc.gaussian_increments},
      {"m_list", std::move(m_list)},
      {"const_row", cfg.mc.const_row}};
  j["outputs"] = {{"dir", cfg.outputs.dir},
                  {"thresholds", cfg.outputs.thresholds},
                  {"values", cfg.outputs.values},
                  {"compare", cfg.outputs.compare},
                  {"summary", cfg.outputs.summary}};
  return j;
}

ordered_json results_tree(const SolveResult &res) {
  const SpectralData &sd = res.value.spec;
  ordered_json roots = ordered_json::array();
  for (int i = 0; i < sd.count(); ++i) {
    roots.push_back({{"xi_re", sd.xi[static_cast<std::size_t>(i)].real()},
                     {"xi_im", sd.xi[static_cast<std::size_t>(i)].imag()},
                     {"kappa_re", sd.kappa[static_cast<std::size_t>(i)].real()},
                     {"kappa_im", sd.kappa[static_cast<std::size_t>(i)].imag()}});
  }

  ordered_json steps = ordered_json::array();
  double worst_step_continuity = 0.0;
  double worst_imag_residue = 0.0;
  for (const StepDiagnostics &s : res.diagnostics.steps) {
    worst_step_continuity = std::max(worst_step_continuity, s.continuity_residual);
    worst_imag_residue = std::max(worst_imag_residue, s.imag_residue);
    steps.push_back({{"stage", s.stage},
                     {"substep", s.substep},
                     {"continuity_residual", s.continuity_residual},
                     {"imag_residue", s.imag_residue}});
  }
  ordered_json stages = ordered_json::array();
  for (const StageDiagnostics &s : res.diagnostics.stages) {
    stages.push_back({{"stage", s.stage},
                      {"threshold", s.threshold},
                      {"gradient_residual", s.gradient_residual},
                      {"sign_changes", s.sign_changes},
                      {"continuity_residual", s.continuity_residual}});
  }

  ordered_json r;
  r["p"] = sd.p;
  r["phi_p"] = sd.phi_p;
  r["phi_prime_p"] = sd.phi_prime_p;
  r["phi_alpha"] = res.value.phi_alpha;
  r["roots"] = std::move(roots);
  r["thresholds"] = res.thresholds;
  r["timings"] = {{"root_seconds", res.root_phase_seconds},
                  {"recursion_seconds", res.recursion_phase_seconds}};
  r["diagnostics"] = {
      {"max_root_residual", res.diagnostics.max_root_residual},
      {"final_continuity_residual", res.diagnostics.final_continuity_residual},
      {"worst_step_continuity", worst_step_continuity},
      {"worst_imag_residue", worst_imag_residue},
      {"steps", std::move(steps)},
      {"stages", std::move(stages)}};
  return r;
}

const char *error_name(const Error &e) {
  if (dynamic_cast<const ConfigError *>(&e)) return "ConfigError";
  if (dynamic_cast<const DomainError *>(&e)) return "DomainError";
  if (dynamic_cast<const PreconditionViolated *>(&e)) return "PreconditionViolated";
  if (dynamic_cast<const AssumptionViolated *>(&e)) return "AssumptionViolated";
  if (dynamic_cast<const SingularResolvent *>(&e)) return "SingularResolvent";
  if (dynamic_cast<const NoRoot *>(&e)) return "NoRoot";
  if (dynamic_cast<const NoBracket *>(&e)) return "NoBracket";
  if (dynamic_cast<const RootMultiplicity *>(&e)) return "RootMultiplicity";
  if (dynamic_cast<const CountMismatch *>(&e)) return "CountMismatch";
  if (dynamic_cast<const ImaginaryResidue *>(&e)) return "ImaginaryResidue";
  if (dynamic_cast<const MonotonicityViolation *>(&e)) return "MonotonicityViolation";
  if (dynamic_cast<const PrecisionBreakdown *>(&e)) return "PrecisionBreakdown";
  return "Error";
}

}  // namespace

int cmd_solve(const ProblemConfig &cfg) {
  std::vector<CoefficientSet> stage_values;
  const SolveResult res = solve(cfg.model, cfg.alpha_rate, cfg.K, cfg.delta,
                                cfg.N, cfg.M, cfg.tol, &stage_values);

  const fs::path thresholds_path = output_path(cfg, cfg.outputs.thresholds);
  {
    std::ofstream out = open_output(thresholds_path);
    out << "stage,threshold\n";
    for (std::size_t i = 0; i < res.thresholds.size(); ++i) {
      out << (i + 1) << ',' << fmt17(res.thresholds[i]) << '\n';
    }
    finish_output(out, thresholds_path);
  }

  const GridSpec grid = cfg.grid ? *cfg.grid
                                 : GridSpec{std::log(cfg.K) - 1.0,
                                            res.thresholds.front() + 1.0, 201};
  const fs::path values_path = output_path(cfg, cfg.outputs.values);
  {
    std::ofstream out = open_output(values_path);
    out << 'x';
    for (int n = 1; n <= cfg.N; ++n) out << ",v" << n;
    out << '\n';
    for (double x : grid_points(grid)) {
      out << fmt17(x);
      for (const CoefficientSet &set : stage_values) {
        out << ',' << fmt17(evaluate(set, x, cfg.tol));
      }
      out << '\n';
    }
    finish_output(out, values_path);
  }

  const fs::path summary_path = output_path(cfg, cfg.outputs.summary);
  {
    ordered_json j = config_tree(cfg, grid);
    j["results"] = results_tree(res);
    std::ofstream out = open_output(summary_path);
    out << j.dump(2) << '\n';
    finish_output(out, summary_path);
  }
  return 0;
}

int cmd_compare_mc(const ProblemConfig &cfg) {
  validate_assumptions(cfg.model, cfg.alpha_rate);
  const double phi_alpha = phi(cfg.model, cfg.alpha_rate);
  if (phi_alpha <= 1.0) {
    throw AssumptionViolated("compare-mc: phi(alpha) <= 1, no finite threshold");
  }
  const double a1 = first_threshold(phi_alpha, cfg.K);

  // The one-opportunity function is the same for every row; the horizon
  // randomization only affects what is layered on top of it.
  const int m0 = cfg.mc.m_list.front();
  const SpectralData sd0 = spectral_roots(
      cfg.model, cfg.alpha_rate + static_cast<double>(m0) / cfg.delta, cfg.tol);
  const CoefficientSet v1 = base_case(sd0, phi_alpha, cfg.K, m0,
                                      static_cast<double>(m0) / cfg.delta);
  const auto value_fn = [&](double x) { return evaluate(v1, x, cfg.tol); };

  SimulationConfig sim;
  sim.paths = cfg.mc.paths;
  sim.steps_per_interarrival = cfg.mc.steps_per_interarrival;
  sim.seed = cfg.mc.seed;
  sim.gaussian_increments = cfg.mc.gaussian_increments;

  const fs::path compare_path = output_path(cfg, cfg.outputs.compare);
  std::ofstream out = open_output(compare_path);
  out << "m,closed_form,mc_mean,mc_ci_low,mc_ci_high,solve_seconds,mc_seconds\n";

  for (int m : cfg.mc.m_list) {
    validate_assumptions(cfg.model, cfg.alpha_rate, m, cfg.delta);
    const double lambda = static_cast<double>(m) / cfg.delta;

    const auto t0 = steady::now();
    const SpectralData sd =
        spectral_roots(cfg.model, cfg.alpha_rate + lambda, cfg.tol);
    CoefficientSet u = base_case(sd, phi_alpha, cfg.K, m, lambda);
    for (int step = 1; step <= m; ++step) u = resolvent_step(u, cfg.tol);
    const double closed = evaluate(u, a1, cfg.tol);
    const double solve_seconds = seconds_since(t0);

    sim.horizon = Horizon::erlang(m, lambda);
    const auto t1 = steady::now();
    const Estimate est =
        estimate_expectation(cfg.model, value_fn, a1, cfg.alpha_rate, sim);
    const double mc_seconds = seconds_since(t1);

    out << m << ',' << fmt17(closed) << ',' << fmt17(est.mean) << ','
        << fmt17(est.ci_low) << ',' << fmt17(est.ci_high) << ','
        << fmt17(solve_seconds) << ',' << fmt17(mc_seconds) << '\n';
  }

  if (cfg.mc.const_row) {
    sim.horizon = Horizon::constant(cfg.delta);
    const auto t1 = steady::now();
    const Estimate est =
        estimate_expectation(cfg.model, value_fn, a1, cfg.alpha_rate, sim);
    const double mc_seconds = seconds_since(t1);
    out << "const,," << fmt17(est.mean) << ',' << fmt17(est.ci_low) << ','
        << fmt17(est.ci_high) << ",," << fmt17(mc_seconds) << '\n';
  }
  finish_output(out, compare_path);
  return 0;
}

int cmd_eval(const ProblemConfig &cfg, const std::vector<double> &xs) {
  if (xs.empty()) return 0;
  const SolveResult res =
      solve(cfg.model, cfg.alpha_rate, cfg.K, cfg.delta, cfg.N, cfg.M, cfg.tol);
  for (double x : xs) {
    std::printf("%s\n", fmt17(evaluate(res.value, x, cfg.tol)).c_str());
  }
  return 0;
}

int run_cli(int argc, char **argv) {
  CLI::App app{"Closed-form solver for refracted optimal multiple stopping"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> grid_text;
  std::optional<std::string> m_list_text;
  std::vector<double> eval_points;

  const auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "JSON problem description")
        ->required();
    sub->add_option("--out-dir", out_dir, "Directory for output files");
    sub->add_option("--seed", seed, "Monte Carlo seed override");
    sub->add_option("--grid", grid_text, "Evaluation grid as lo:hi:n");
    sub->add_option("--m-list", m_list_text,
                    "Opportunity counts for compare-mc, e.g. 1,3,5");
  };

  CLI::App *sub_solve = app.add_subcommand(
      "solve", "Compute thresholds and value functions, write CSV + summary");
  add_common(sub_solve);
  CLI::App *sub_compare = app.add_subcommand(
      "compare-mc", "Closed form against Monte Carlo at the first threshold");
  add_common(sub_compare);
  CLI::App *sub_eval = app.add_subcommand(
      "eval", "Print the final-stage value at given points");
  add_common(sub_eval);
  sub_eval->add_option("x", eval_points, "Points to evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ProblemConfig cfg = load_config(config_path);
    if (out_dir) cfg.outputs.dir = *out_dir;
    if (seed) cfg.mc.seed = *seed;
    if (grid_text) cfg.grid = parse_grid(*grid_text);
    if (m_list_text) cfg.mc.m_list = parse_m_list(*m_list_text);

    if (app.got_subcommand(sub_solve)) return cmd_solve(cfg);
    if (app.got_subcommand(sub_compare)) return cmd_compare_mc(cfg);
    std::vector<double> xs = eval_points;
    if (grid_text) {
      for (double x : grid_points(*cfg.grid)) xs.push_back(x);
    }
    return cmd_eval(cfg, xs);
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "ConfigError: %s\n", e.what());
    return 2;
  } catch (const AssumptionViolated &e) {
    std::fprintf(stderr, "AssumptionViolated: %s\n", e.what());
    return 3;
  } catch (const PrecisionBreakdown &e) {
    std::fprintf(stderr, "PrecisionBreakdown at stage %d, sub-step %d: %s\n",
                 e.stage(), e.substep(), e.what());
    return 4;
  } catch (const Error &e) {
    std::fprintf(stderr, "%s: %s\n", error_name(e), e.what());
    return 4;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}

}  // namespace refract

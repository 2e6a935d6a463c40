#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cases.hpp"
#include "refract/commands.hpp"
#include "refract/config.hpp"
#include "refract/errors.hpp"
#include "refract/levy_model.hpp"
#include "refract/recursion.hpp"

using namespace refract;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path sandbox(const std::string &name) {
  const fs::path dir = fs::current_path() / ("cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

json jump_tree(const PhaseType &jumps) {
  json alpha = json::array();
  for (int i = 0; i < jumps.dim(); ++i) alpha.push_back(jumps.alpha(i));
  json T = json::array();
  for (int i = 0; i < jumps.dim(); ++i) {
    json row = json::array();
    for (int k = 0; k < jumps.dim(); ++k) row.push_back(jumps.T(i, k));
    T.push_back(row);
  }
  return {{"alpha", alpha}, {"T", T}};
}

json base_tree(const PhaseType &jumps, double gamma, int N, int M) {
  json j;
  j["problem"] = {{"K", cases::kK},
                  {"alpha_rate", cases::kAlpha},
                  {"delta", cases::kDelta},
                  {"N", N},
                  {"M", M}};
  j["model"] = {{"sigma", cases::kSigma},
                {"rho", cases::kRho},
                {"gamma", gamma},
                {"jumps", jump_tree(jumps)}};
  return j;
}

fs::path write_config(const fs::path &dir, const json &j,
                      const std::string &name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  return p;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_tool(const fs::path &dir, const std::string &args) {
  const std::string cmd = "cd \"" + dir.string() + "\" && \"" REFRACT_BIN "\" " +
                          args + " > stdout.txt 2> stderr.txt";
  const int rc = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(dir / "stdout.txt");
  r.err = slurp(dir / "stderr.txt");
  return r;
}

}  // namespace

TEST_CASE("grid and m-list argument parsing") {
  const GridSpec g = parse_grid("0:1.5:11");
  CHECK(g.lo == 0.0);
  CHECK(g.hi == 1.5);
  CHECK(g.points == 11);

  CHECK_THROWS_AS(parse_grid("1:2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("a:b:c"), ConfigError);
  CHECK_THROWS_AS(parse_grid("1:2:2.5"), ConfigError);
  CHECK_THROWS_AS(parse_grid("2:1:5"), ConfigError);
  CHECK_THROWS_AS(parse_grid("1:2:1"), ConfigError);

  CHECK(parse_m_list("1,3,5") == std::vector<int>({1, 3, 5}));
  CHECK(parse_m_list("7") == std::vector<int>({7}));
  CHECK_THROWS_AS(parse_m_list(""), ConfigError);
  CHECK_THROWS_AS(parse_m_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_m_list("0"), ConfigError);
  CHECK_THROWS_AS(parse_m_list("1,x"), ConfigError);
}

TEST_CASE("config loading") {
  const fs::path dir = sandbox("config");
  const json good = base_tree(cases::exponential_jumps(), 0.02, 2, 1);

  const ProblemConfig cfg = load_config(write_config(dir, good).string());
  CHECK(cfg.K == cases::kK);
  CHECK(cfg.alpha_rate == cases::kAlpha);
  CHECK(cfg.N == 2);
  CHECK(cfg.M == 1);
  CHECK(cfg.model.drift_tilde == doctest::Approx(0.69).epsilon(1e-12));
  CHECK(!cfg.grid.has_value());
  CHECK(cfg.mc.paths == 100000);
  CHECK(cfg.mc.m_list == std::vector<int>({1, 2, 3, 4, 5}));

  json j = good;
  j["model"]["drift_tilde"] = 0.69;
  CHECK_THROWS_AS(load_config(write_config(dir, j, "both.json").string()),
                  ConfigError);

  j = good;
  j["model"].erase("gamma");
  CHECK_THROWS_AS(load_config(write_config(dir, j, "neither.json").string()),
                  ConfigError);

  j = good;
  j["problem"].erase("K");
  CHECK_THROWS_AS(load_config(write_config(dir, j, "nok.json").string()),
                  ConfigError);

  j = good;
  j["numerics"]["tolerances"]["root_residual"] = -1.0;
  CHECK_THROWS_AS(load_config(write_config(dir, j, "toler.json").string()),
                  ConfigError);

  j = good;
  j["numerics"]["grid"] = {{"lo", 2.0}, {"hi", 1.0}, {"points", 10}};
  CHECK_THROWS_AS(load_config(write_config(dir, j, "grid.json").string()),
                  ConfigError);

  j = good;
  j["numerics"]["mc"] = {{"paths", 0}};
  CHECK_THROWS_AS(load_config(write_config(dir, j, "mc.json").string()),
                  ConfigError);

  j = good;
  j["model"]["jumps"]["alpha"] = {0.6, 0.6};
  CHECK_THROWS_AS(load_config(write_config(dir, j, "alpha.json").string()),
                  ConfigError);

  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);

  std::ofstream(dir / "broken.json") << "{oops";
  CHECK_THROWS_AS(load_config((dir / "broken.json").string()), ConfigError);
}

TEST_CASE("solve outputs and summary round trip") {
  const fs::path dir = sandbox("roundtrip");
  ProblemConfig cfg = load_config(
      write_config(dir, base_tree(cases::exponential_jumps(), 0.02, 2, 1))
          .string());
  cfg.outputs.dir = (dir / "a").string();
  CHECK(cmd_solve(cfg) == 0);

  const json summary = json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["model"]["drift_tilde"].get<double>() ==
        doctest::Approx(0.69).epsilon(1e-12));
  CHECK(summary["results"]["thresholds"].size() == 2);
  CHECK(summary["results"]["p"].get<double>() == doctest::Approx(1.98));

  // Reloading the summary reproduces the run byte for byte: drift_tilde is
  // stored resolved and the fitted jump parameters reload unchanged.
  ProblemConfig cfg2 = load_config((dir / "a" / "summary.json").string());
  cfg2.outputs.dir = (dir / "b").string();
  CHECK(cmd_solve(cfg2) == 0);
  CHECK(slurp(dir / "a" / "thresholds.csv") ==
        slurp(dir / "b" / "thresholds.csv"));
  CHECK(slurp(dir / "a" / "values.csv") == slurp(dir / "b" / "values.csv"));

  // The thresholds written as CSV parse back to the exact doubles in the
  // summary tree.
  const auto rows = lines_of(slurp(dir / "a" / "thresholds.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "stage,threshold");
  for (int i = 0; i < 2; ++i) {
    const auto fields = split_csv(rows[i + 1]);
    REQUIRE(fields.size() == 2);
    const double csv_value = std::strtod(fields[1].c_str(), nullptr);
    CHECK(csv_value == summary["results"]["thresholds"][i].get<double>());
  }
}

TEST_CASE("eval with no points is a no-op") {
  const fs::path dir = sandbox("evalempty");
  ProblemConfig cfg = load_config(
      write_config(dir, base_tree(cases::exponential_jumps(), 0.02, 1, 1))
          .string());
  CHECK(cmd_eval(cfg, {}) == 0);
}

TEST_CASE("tool: help and argument errors") {
  const fs::path dir = sandbox("args");
  CHECK(run_tool(dir, "--help").code == 0);
  CHECK(run_tool(dir, "--help").out.find("solve") != std::string::npos);
  CHECK(run_tool(dir, "bogus").code == 2);
  CHECK(run_tool(dir, "solve").code == 2);

  write_config(dir, base_tree(cases::exponential_jumps(), 0.02, 1, 1));
  CHECK(run_tool(dir, "eval --config config.json --grid 1:2 3.0").code == 2);
}

TEST_CASE("tool: solve writes decreasing thresholds") {
  const fs::path dir = sandbox("solve5");
  write_config(dir, base_tree(cases::exponential_jumps(), 0.02, 5, 1));
  const Run r = run_tool(dir, "solve --config config.json");
  CHECK(r.code == 0);

  const auto rows = lines_of(slurp(dir / "thresholds.csv"));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "stage,threshold");
  double prev = 1e300;
  for (int i = 1; i <= 5; ++i) {
    const auto fields = split_csv(rows[i]);
    REQUIRE(fields.size() == 2);
    CHECK(fields[0] == std::to_string(i));
    const double a = std::strtod(fields[1].c_str(), nullptr);
    CHECK(a < prev);
    CHECK(a > std::log(cases::kK));
    prev = a;
  }
}

TEST_CASE("tool: value grid matches the payoff above the threshold") {
  const fs::path dir = sandbox("values");
  json j = base_tree(cases::exponential_jumps(), 0.02, 1, 1);
  j["numerics"]["grid"] = {{"lo", 3.0}, {"hi", 9.0}, {"points", 121}};
  write_config(dir, j);
  CHECK(run_tool(dir, "solve --config config.json").code == 0);

  const auto rows = lines_of(slurp(dir / "values.csv"));
  REQUIRE(rows.size() == 122);
  CHECK(rows[0] == "x,v1");
  const auto thr = lines_of(slurp(dir / "thresholds.csv"));
  const double a1 = std::strtod(split_csv(thr[1])[1].c_str(), nullptr);

  int above = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto fields = split_csv(rows[i]);
    REQUIRE(fields.size() == 2);
    const double x = std::strtod(fields[0].c_str(), nullptr);
    const double v = std::strtod(fields[1].c_str(), nullptr);
    if (x >= a1) {
      ++above;
      const double payoff = std::exp(x) - cases::kK;
      CHECK(std::abs(v - payoff) <= 1e-9 * (1.0 + std::abs(payoff)));
    }
  }
  CHECK(above > 10);
}

TEST_CASE("tool: eval prints the decay ratio") {
  const fs::path dir = sandbox("eval");
  write_config(dir, base_tree(cases::exponential_jumps(), 0.02, 1, 1));
  const Run r = run_tool(dir, "eval --config config.json 1.0 2.0");
  CHECK(r.code == 0);
  const auto out = lines_of(r.out);
  REQUIRE(out.size() == 2);
  const double v1 = std::strtod(out[0].c_str(), nullptr);
  const double v2 = std::strtod(out[1].c_str(), nullptr);

  const LevyModel m = cases::model_for(cases::exponential_jumps(), 0.02);
  const double pa = phi(m, cases::kAlpha);
  CHECK(v2 / v1 == doctest::Approx(std::exp(pa)).epsilon(1e-6));

  const Run empty = run_tool(dir, "eval --config config.json");
  CHECK(empty.code == 0);
  CHECK(empty.out.empty());

  const Run grid = run_tool(dir, "eval --config config.json --grid 0:1:3");
  CHECK(grid.code == 0);
  CHECK(lines_of(grid.out).size() == 3);
}

TEST_CASE("tool: assumption violations exit 3") {
  const fs::path dir = sandbox("assume");
  write_config(dir, base_tree(cases::exponential_jumps(), -0.05, 1, 1));
  const Run r = run_tool(dir, "solve --config config.json");
  CHECK(r.code == 3);
  CHECK(r.err.find("psi(1)") != std::string::npos);
}

TEST_CASE("tool: precision breakdown exits 4 with a location") {
  const fs::path dir = sandbox("breakdown");
  write_config(dir, base_tree(cases::folded_normal_fit(), 0.10, 5, 5));
  const Run r = run_tool(dir, "solve --config config.json");
  CHECK(r.code == 4);
  CHECK(r.err.find("PrecisionBreakdown at stage") != std::string::npos);
}

TEST_CASE("tool: malformed config exits 2") {
  const fs::path dir = sandbox("badcfg");
  std::ofstream(dir / "config.json") << "{oops";
  CHECK(run_tool(dir, "solve --config config.json").code == 2);

  json j = base_tree(cases::exponential_jumps(), 0.02, 1, 1);
  j["model"]["drift_tilde"] = 0.69;
  write_config(dir, j, "both.json");
  CHECK(run_tool(dir, "solve --config both.json").code == 2);
}

TEST_CASE("tool: compare-mc table") {
  const fs::path dir = sandbox("compare");
  json j = base_tree(cases::exponential_jumps(), 0.02, 1, 1);
  j["numerics"]["mc"] = {{"paths", 2000}, {"seed", 5}, {"m_list", {1, 2}}};
  write_config(dir, j);
  const Run r = run_tool(dir, "compare-mc --config config.json");
  CHECK(r.code == 0);

  const auto rows = lines_of(slurp(dir / "compare.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] ==
        "m,closed_form,mc_mean,mc_ci_low,mc_ci_high,solve_seconds,mc_seconds");
  for (int i = 0; i < 2; ++i) {
    const auto fields = split_csv(rows[i + 1]);
    REQUIRE(fields.size() == 7);
    CHECK(fields[0] == std::to_string(i + 1));
    const double closed = std::strtod(fields[1].c_str(), nullptr);
    CHECK(closed ==
          doctest::Approx(cases::kOneStage002[0][i]).epsilon(1e-3));
    const double mean = std::strtod(fields[2].c_str(), nullptr);
    const double lo = std::strtod(fields[3].c_str(), nullptr);
    const double hi = std::strtod(fields[4].c_str(), nullptr);
    CHECK(lo < mean);
    CHECK(mean < hi);
  }
  const auto const_fields = split_csv(rows[3]);
  REQUIRE(const_fields.size() == 7);
  CHECK(const_fields[0] == "const");
  CHECK(const_fields[1].empty());
  CHECK(const_fields[5].empty());

  // Same seed reproduces the estimates bit for bit (timing columns are
  // wall clock and excluded); a new seed moves them.
  const auto estimates = [&] {
    std::vector<std::string> out;
    for (const auto &row : lines_of(slurp(dir / "compare.csv"))) {
      const auto fields = split_csv(row);
      out.push_back(fields[0] + "," + fields[1] + "," + fields[2] + "," +
                    fields[3] + "," + fields[4]);
    }
    return out;
  };
  const auto first = estimates();
  CHECK(run_tool(dir, "compare-mc --config config.json").code == 0);
  CHECK(estimates() == first);
  CHECK(run_tool(dir, "compare-mc --config config.json --seed 6").code == 0);
  CHECK(estimates() != first);

  // Narrowing the list via the flag drops rows; disabling the constant
  // row drops the trailer.
  CHECK(run_tool(dir, "compare-mc --config config.json --m-list 1").code == 0);
  CHECK(lines_of(slurp(dir / "compare.csv")).size() == 3);

  j["numerics"]["mc"]["const_row"] = false;
  write_config(dir, j, "noconst.json");
  CHECK(run_tool(dir, "compare-mc --config noconst.json --m-list 1").code == 0);
  const auto noconst = lines_of(slurp(dir / "compare.csv"));
  CHECK(noconst.size() == 2);
}

TEST_CASE("tool: out-dir flag redirects every file") {
  const fs::path dir = sandbox("outdir");
  write_config(dir, base_tree(cases::exponential_jumps(), 0.02, 1, 1));
  const Run r = run_tool(dir, "solve --config config.json --out-dir sub/run1");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "sub" / "run1" / "thresholds.csv"));
  CHECK(fs::exists(dir / "sub" / "run1" / "values.csv"));
  CHECK(fs::exists(dir / "sub" / "run1" / "summary.json"));
  CHECK(!fs::exists(dir / "thresholds.csv"));
}

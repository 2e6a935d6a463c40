#pragma once

#include <vector>

#include "refract/config.hpp"

namespace refract {

// Runs the backward recursion and writes thresholds.csv, values.csv and
// summary.json into the configured output directory. The summary file is
// itself a loadable config, so a run can be reproduced from it exactly.
int cmd_solve(const ProblemConfig &cfg);

// Writes compare.csv: the single-opportunity value at the first threshold
// computed in closed form against Monte Carlo estimates, one row per entry
// of m_list plus a deterministic-horizon row when const_row is set.
int cmd_compare_mc(const ProblemConfig &cfg);

// Solves, then prints the final-stage value at each requested point to
// stdout, one per line. An empty point list prints nothing.
int cmd_eval(const ProblemConfig &cfg, const std::vector<double> &xs);

// Parses the command line, dispatches to one of the commands above, and
// maps failures onto exit codes: 2 for configuration problems, 3 for model
// assumption violations, 4 for numerical failures.
int run_cli(int argc, char **argv);

}  // namespace refract

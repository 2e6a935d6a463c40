#pragma once

#include <utility>
#include <vector>

#include "refract/levy_model.hpp"
#include "refract/piecewise.hpp"

namespace refract {

struct StepDiagnostics {
  int stage = 0;
  int substep = 0;
  // Largest scaled jump across the internal thresholds after the step.
  double continuity_residual = 0.0;
  // Largest scaled imaginary part discarded when storing real slots, and
  // largest conjugate-pair mismatch before symmetrization.
  double imag_residue = 0.0;
};

struct StageDiagnostics {
  int stage = 0;
  double threshold = 0.0;
  // |g| at the accepted root of the first-order condition.
  double gradient_residual = 0.0;
  // Sign changes seen on the coarse scan; more than one is suspicious and
  // worth surfacing, though the bracketed root is still returned.
  int sign_changes = 0;
  double continuity_residual = 0.0;
};

struct SolveDiagnostics {
  std::vector<StepDiagnostics> steps;
  std::vector<StageDiagnostics> stages;
  double max_root_residual = 0.0;
  double final_continuity_residual = 0.0;
};

struct SolveResult {
  std::vector<double> thresholds;
  CoefficientSet value;
  SolveDiagnostics diagnostics;
  double root_phase_seconds = 0.0;
  double recursion_phase_seconds = 0.0;
};

// Unique solution of the first-stage exercise condition,
// log(phi_alpha K / (phi_alpha - 1)); always above log K.
double first_threshold(double phi_alpha, double K);

// The one-opportunity value function: payoff e^x - K above the first
// threshold, geometric decay e^{phi_alpha x} below it.
CoefficientSet base_case(const SpectralData &spec, double phi_alpha,
                         double K, int steps_per_stage, double lambda);

// One exponential-horizon expectation applied to the piecewise set:
// sub-step m -> m+1, polynomial degree I -> I+1.
CoefficientSet resolvent_step(const CoefficientSet &gamma,
                              const Tolerances &tol = {},
                              StepDiagnostics *diag = nullptr);

// Finds the next exercise threshold from the first-order condition and
// rebuilds the set for the enlarged stopping problem: stage n -> n+1.
std::pair<double, CoefficientSet> advance_stage(
    const CoefficientSet &gamma, double K, const Tolerances &tol = {},
    StageDiagnostics *diag = nullptr);

// Full backward recursion: base case, then for each of the N-1 stage
// advances M resolvent steps followed by the threshold search.  When
// stage_values is given it receives the N per-stage value functions,
// first stage first; the last entry equals SolveResult::value.
SolveResult solve(const LevyModel &model, double alpha_rate, double K,
                  double delta, int N, int M, const Tolerances &tol = {},
                  std::vector<CoefficientSet> *stage_values = nullptr);

}  // namespace refract

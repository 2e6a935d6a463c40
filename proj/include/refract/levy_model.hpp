#pragma once

#include <optional>
#include <string>

#include "refract/numerics.hpp"
#include "refract/phase_type.hpp"

namespace refract {

// Spectrally negative jump diffusion
//   X_t - X_0 = drift_tilde * t + sigma * B_t - sum_{k=1}^{N_t} Z_k
// with N a Poisson process of rate rho and Z_k i.i.d. phase-type.
struct LevyModel {
  double drift_tilde = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  PhaseType jumps;

  void validate() const;
};

// psi(s) = drift_tilde*s + sigma^2 s^2 / 2 + rho*(E[e^{-sZ}] - 1),
// so that E[e^{s(X_t - X_0)}] = e^{t psi(s)}.
cplx laplace_exponent(const LevyModel &model, cplx s);
double laplace_exponent(const LevyModel &model, double s);

// psi'(s) = drift_tilde + sigma^2 s - rho * alpha (sI-T)^{-2} t.
cplx laplace_exponent_derivative(const LevyModel &model, cplx s);
double laplace_exponent_derivative(const LevyModel &model, double s);

// Drift that makes psi(1) = alpha_rate - gamma, i.e. that turns
// e^{-(alpha_rate - gamma) t + X_t} into a martingale.
double calibrate_drift(double sigma, double rho, const PhaseType &jumps,
                       double alpha_rate, double gamma);

struct ValidationReport {
  double psi_at_one = 0.0;
  double psi_prime_at_one = 0.0;
  // "strict" when psi(1) < alpha_rate, "boundary" when psi(1) = alpha_rate < 0
  // with psi'(1) < 0.
  std::string clause;
  // sigma = 0 leaves the density assumption to the jump component; flagged
  // so callers can warn.
  bool density_warning = false;
};

// Standing assumptions for the stopping problem. Throws AssumptionViolated
// naming the failed clause; returns a report when everything passes. When
// (M, delta) are supplied, additionally requires p = alpha_rate + M/delta > 0.
ValidationReport validate_assumptions(const LevyModel &model,
                                      double alpha_rate,
                                      std::optional<int> M = std::nullopt,
                                      std::optional<double> delta = std::nullopt);

// Largest real root of psi(s) = q. For q >= 0 the search starts at 0, for
// q < 0 at 1 (where the assumptions guarantee a root >= 1 exists).
double phi(const LevyModel &model, double q);

}  // namespace refract

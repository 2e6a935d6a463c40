#include "refract/levy_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "refract/errors.hpp"

namespace refract {

void LevyModel::validate() const {
  if (sigma < 0.0) throw ConfigError("model: sigma must be >= 0");
  if (rho <= 0.0) throw ConfigError("model: rho must be > 0");
  jumps.validate();
}

cplx laplace_exponent(const LevyModel &model, cplx s) {
  cplx out = model.drift_tilde * s + 0.5 * model.sigma * model.sigma * s * s;
  if (model.rho > 0.0) out += model.rho * (model.jumps.transform(s) - 1.0);
  return out;
}

double laplace_exponent(const LevyModel &model, double s) {
  return laplace_exponent(model, cplx(s, 0.0)).real();
}

cplx laplace_exponent_derivative(const LevyModel &model, cplx s) {
  cplx out = model.drift_tilde + model.sigma * model.sigma * s;
  if (model.rho > 0.0) {
    const int d = model.jumps.dim();
    Eigen::MatrixXcd M = -model.jumps.T.cast<cplx>();
    M.diagonal().array() += s;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
    if (!lu.isInvertible()) {
      throw SingularResolvent("resolvent (sI - T) singular in psi'(s)");
    }
    Eigen::VectorXcd rhs = model.jumps.exit_vector().cast<cplx>();
    Eigen::VectorXcd once = lu.solve(rhs);
    Eigen::VectorXcd twice = lu.solve(once);
    cplx dot = 0.0;
    for (int k = 0; k < d; ++k) dot += model.jumps.alpha(k) * twice(k);
    out -= model.rho * dot;
  }
  return out;
}

double laplace_exponent_derivative(const LevyModel &model, double s) {
  return laplace_exponent_derivative(model, cplx(s, 0.0)).real();
}

double calibrate_drift(double sigma, double rho, const PhaseType &jumps,
                       double alpha_rate, double gamma) {
  double jump_part = 0.0;
  if (rho > 0.0) {
    jump_part = rho * (jumps.transform(cplx(1.0, 0.0)).real() - 1.0);
  }
  return (alpha_rate - gamma) - 0.5 * sigma * sigma - jump_part;
}

ValidationReport validate_assumptions(const LevyModel &model,
                                      double alpha_rate,
                                      std::optional<int> M,
                                      std::optional<double> delta) {
  ValidationReport report;
  report.psi_at_one = laplace_exponent(model, 1.0);
  report.psi_prime_at_one = laplace_exponent_derivative(model, 1.0);
  report.density_warning = (model.sigma == 0.0);

  if (model.sigma == 0.0 && model.drift_tilde <= 0.0) {
    throw AssumptionViolated(
        "subordinator exclusion failed: sigma = 0 requires drift_tilde > 0");
  }

  const double eq_tol = 1e-12 * std::max(1.0, std::abs(alpha_rate));
  if (report.psi_at_one < alpha_rate - eq_tol) {
    report.clause = "strict";
  } else if (std::abs(report.psi_at_one - alpha_rate) <= eq_tol &&
             alpha_rate < 0.0 && report.psi_prime_at_one < 0.0) {
    report.clause = "boundary";
  } else {
    std::ostringstream os;
    os << "discount condition failed: psi(1) = " << report.psi_at_one
       << " must be < alpha = " << alpha_rate
       << " (or equal with alpha < 0 and psi'(1) < 0, got psi'(1) = "
       << report.psi_prime_at_one << ")";
    throw AssumptionViolated(os.str());
  }

  if (M.has_value() != delta.has_value()) {
    throw PreconditionViolated(
        "validate_assumptions: supply M and delta together or not at all");
  }
  if (M && delta) {
    if (*M < 1) throw AssumptionViolated("M must be >= 1");
    if (*delta <= 0.0) throw AssumptionViolated("delta must be > 0");
    double p = alpha_rate + static_cast<double>(*M) / *delta;
    if (p <= 0.0) {
      std::ostringstream os;
      os << "killing rate p = alpha + M/delta = " << p << " must be > 0";
      throw AssumptionViolated(os.str());
    }
  }
  return report;
}

namespace {

// Zero of the increasing function psi' to the right of lo, by doubling
// then bisection. Used to hop over the decreasing branch of psi.
double convexity_minimizer(const LevyModel &model, double lo) {
  double hi = lo + 1.0;
  int guard = 0;
  while (laplace_exponent_derivative(model, hi) <= 0.0) {
    hi = lo + 2.0 * (hi - lo);
    if (++guard > 200) {
      throw NoRoot("phi: psi' never became positive while bracketing");
    }
  }
  double a = lo, b = hi;
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::abs(b)); ++it) {
    double mid = 0.5 * (a + b);
    if (laplace_exponent_derivative(model, mid) < 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return b;
}

}  // namespace

double phi(const LevyModel &model, double q) {
  double lo = (q < 0.0) ? 1.0 : 0.0;
  if (laplace_exponent_derivative(model, lo) < 0.0) {
    lo = convexity_minimizer(model, lo);
  }
  const double f_lo = laplace_exponent(model, lo) - q;
  const double tol = 1e-12 * std::max(1.0, std::abs(q));
  if (f_lo > tol) {
    std::ostringstream os;
    os << "phi: psi exceeds q = " << q << " already at s = " << lo
       << "; no root on the increasing branch";
    throw NoRoot(os.str());
  }

  double hi = std::max(lo + 1.0, 2.0 * lo);
  int guard = 0;
  while (laplace_exponent(model, hi) - q <= 0.0) {
    hi = lo + 2.0 * (hi - lo);
    if (++guard > 200) throw NoRoot("phi: bracket doubling cap exceeded");
  }

  // Safeguarded Newton: fall back to bisection whenever the Newton step
  // leaves the bracket or fails to shrink the residual.
  double a = lo, b = hi;
  double x = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    double f = laplace_exponent(model, x) - q;
    if (std::abs(f) <= tol) break;
    if (f > 0.0) {
      b = x;
    } else {
      a = x;
    }
    double df = laplace_exponent_derivative(model, x);
    double step = (df != 0.0) ? x - f / df : a - 1.0;
    x = (step > a && step < b) ? step : 0.5 * (a + b);
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() *
                     (1.0 + std::abs(b))) {
      break;
    }
  }
  const double residual = std::abs(laplace_exponent(model, x) - q);
  if (residual > 1e-10 * std::max(1.0, std::abs(q))) {
    std::ostringstream os;
    os << "phi: residual " << residual << " above tolerance at s = " << x;
    throw NoRoot(os.str());
  }
  return x;
}

}  // namespace refract

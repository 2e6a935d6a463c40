#pragma once

#include <Eigen/Dense>
#include <complex>

namespace refract {

// Phase-type distribution of the jump sizes: absorption time of a
// transient Markov chain with d phases, initial distribution alpha and
// sub-intensity matrix T. The exit rate vector is t = -T * 1.
struct PhaseType {
  Eigen::VectorXd alpha;
  Eigen::MatrixXd T;

  // Builds a distribution from published fit parameters, which are
  // typically quoted to four decimals. An initial vector whose sum lands a
  // hair above one is rescaled back onto the simplex before validation;
  // sums below one are kept (the deficit is a legitimate atom at zero).
  static PhaseType from_fit(const Eigen::VectorXd &alpha,
                            const Eigen::MatrixXd &T);

  int dim() const { return static_cast<int>(alpha.size()); }

  Eigen::VectorXd exit_vector() const;

  // E[Z] = alpha^T (-T)^{-1} 1
  double mean() const;

  // E[e^{-sZ}] = alpha^T (sI - T)^{-1} t, defined wherever sI - T is
  // invertible. Throws SingularResolvent otherwise.
  std::complex<double> transform(std::complex<double> s) const;

  // Checks the structural requirements and throws ConfigError with a
  // description of the first violation found.
  void validate() const;
};

}  // namespace refract

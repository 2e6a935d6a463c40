#include "refract/phase_type.hpp"

#include <cmath>
#include <sstream>

#include "refract/errors.hpp"

namespace refract {

PhaseType PhaseType::from_fit(const Eigen::VectorXd &alpha,
                              const Eigen::MatrixXd &T) {
  PhaseType pt;
  pt.alpha = alpha;
  pt.T = T;
  double sum = alpha.sum();
  if (sum > 1.0 && sum <= 1.0 + 1e-3) {
    pt.alpha /= sum;
    // The division can leave the recomputed sum an ulp above one. Trim the
    // excess off the largest entry until the stored vector re-reads as a
    // genuine sub-probability vector, so reloading it is a no-op.
    for (int pass = 0; pass < 3; ++pass) {
      const double excess = pt.alpha.sum() - 1.0;
      if (excess <= 0.0) break;
      int k = 0;
      pt.alpha.maxCoeff(&k);
      pt.alpha(k) -= excess;
    }
  }
  pt.validate();
  return pt;
}

Eigen::VectorXd PhaseType::exit_vector() const {
  Eigen::VectorXd t = -T.rowwise().sum();
  // Fitted matrices are quoted to few decimals, so a conservative row can
  // come out a hair negative; clamp the rounding noise away.
  for (int k = 0; k < t.size(); ++k) {
    if (t(k) < 0.0) t(k) = 0.0;
  }
  return t;
}

double PhaseType::mean() const {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(dim());
  return alpha.dot((-T).partialPivLu().solve(ones));
}

std::complex<double> PhaseType::transform(std::complex<double> s) const {
  const int d = dim();
  Eigen::MatrixXcd M = -T.cast<std::complex<double>>();
  M.diagonal().array() += s;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "resolvent (sI - T) singular at s = " << s.real();
    if (s.imag() != 0.0) os << " + " << s.imag() << "i";
    throw SingularResolvent(os.str());
  }
  Eigen::VectorXcd rhs = exit_vector().cast<std::complex<double>>();
  Eigen::VectorXcd sol = lu.solve(rhs);
  std::complex<double> out = 0.0;
  for (int k = 0; k < d; ++k) out += alpha(k) * sol(k);
  return out;
}

void PhaseType::validate() const {
  const int d = dim();
  if (d < 1) throw ConfigError("phase-type: dimension must be at least 1");
  if (T.rows() != d || T.cols() != d) {
    throw ConfigError("phase-type: T must be d x d with d = alpha.size()");
  }
  double sum = 0.0;
  for (int k = 0; k < d; ++k) {
    if (alpha(k) < 0.0) {
      throw ConfigError("phase-type: initial probabilities must be >= 0");
    }
    sum += alpha(k);
  }
  if (sum <= 0.0) {
    throw ConfigError("phase-type: initial probabilities sum to zero");
  }
  // Sub-probability vectors are legitimate (the deficit is an atom at
  // zero), but the sum must not exceed one. from_fit repairs quoted
  // vectors that land slightly above.
  if (sum > 1.0 + 1e-9) {
    std::ostringstream os;
    os << "phase-type: initial probabilities sum to " << sum
       << ", above 1";
    throw ConfigError(os.str());
  }
  for (int i = 0; i < d; ++i) {
    if (!(T(i, i) < 0.0)) {
      throw ConfigError("phase-type: diagonal of T must be negative");
    }
    double row = 0.0;
    for (int j = 0; j < d; ++j) {
      if (j != i && T(i, j) < 0.0) {
        throw ConfigError("phase-type: off-diagonal of T must be >= 0");
      }
      row += T(i, j);
    }
    if (row > 1e-9) {
      throw ConfigError("phase-type: row sums of T must be <= 0");
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
  if (!lu.isInvertible()) {
    throw ConfigError(
        "phase-type: T is singular; absorption would not be certain");
  }
}

}  // namespace refract

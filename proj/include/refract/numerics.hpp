#pragma once

#include <cmath>
#include <complex>

namespace refract {

using cplx = std::complex<double>;

// Compensated (Kahan) accumulator. The coefficient updates add many terms
// of wildly different magnitude, and the plain left-to-right sum loses
// digits exactly where the recursion is most fragile.
template <class T>
class KahanSum {
 public:
  void add(const T &x) {
    T y = x - carry_;
    T t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  T value() const { return sum_; }

 private:
  T sum_{};
  T carry_{};
};

// Numerical knobs shared across the solver. Defaults are the values the
// test suite pins; the CLI lets a config override them.
struct Tolerances {
  // Polished spectral roots must satisfy |psi(s) - p| below this, scaled
  // by max(1, |p|).
  double root_residual = 1e-10;
  // Two roots closer than this are treated as a multiple root.
  double root_separation = 1e-6;
  // A root with |Im| below real_snap * (1 + |Re|) is snapped to the axis.
  double real_snap = 1e-8;
  // Relative imaginary residue allowed when a complex accumulation is
  // stored as a real coefficient.
  double imag_residue = 1e-9;
  // Relative mismatch allowed between members of a conjugate root pair
  // before the step refuses to symmetrize them.
  double conj_pair = 1e-8;
  // Boundary continuity check: probe offset and relative tolerance.
  double continuity_eps = 1e-9;
  double continuity_tol = 1e-6;
  // Scalar root searches (Phi, thresholds).
  double scalar_root_tol = 1e-12;
};

inline bool nearly_equal(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace refract

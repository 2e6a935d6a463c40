#pragma once

#include <cmath>
#include <functional>

// Quadrature oracles for the tests: deliberately independent of the library
// code so closed forms are checked against plain numerical integration.
namespace testq {

using Fn = std::function<double(double)>;

namespace detail {

inline double simpson(const Fn &f, double a, double fa, double b, double fb,
                      double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const Fn &f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, flm);
  const double right = simpson(f, m, fm, b, fb, frm);
  const double delta = left + right - whole;
  // Requests below the roundoff floor of the panel sums would otherwise
  // recurse to full depth without ever converging.
  const double floor =
      5e-15 * (std::abs(left) + std::abs(right) + std::abs(whole));
  if (depth <= 0 || std::abs(delta) <= 15.0 * std::max(tol, floor)) {
    return left + right + delta / 15.0;
  }
  return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with an absolute tolerance.
inline double adaptive_simpson(const Fn &f, double a, double b,
                               double abs_tol) {
  if (!(a < b)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = detail::simpson(f, a, fa, b, fb, fm);
  return detail::adapt(f, a, fa, b, fb, m, fm, whole, abs_tol, 48);
}

// integral over [a, +inf): fixed-width windows until one contributes less
// than the cutoff in absolute value.
inline double integrate_upper_tail(const Fn &f, double a, double abs_tol,
                                   double cutoff, double window = 10.0,
                                   int max_windows = 100) {
  double total = 0.0;
  for (int w = 0; w < max_windows; ++w) {
    const double lo = a + window * w;
    const double piece = adaptive_simpson(f, lo, lo + window, abs_tol);
    total += piece;
    if (std::abs(piece) < cutoff) break;
  }
  return total;
}

// integral over (-inf, b], mirrored marching.
inline double integrate_lower_tail(const Fn &f, double b, double abs_tol,
                                   double cutoff, double window = 10.0,
                                   int max_windows = 100) {
  double total = 0.0;
  for (int w = 0; w < max_windows; ++w) {
    const double hi = b - window * w;
    const double piece = adaptive_simpson(f, hi - window, hi, abs_tol);
    total += piece;
    if (std::abs(piece) < cutoff) break;
  }
  return total;
}

}  // namespace testq

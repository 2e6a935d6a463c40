#include "refract/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "refract/errors.hpp"

namespace refract {

RegionCoefficients RegionCoefficients::zero(int root_count, int degree) {
  RegionCoefficients r;
  r.C.assign(root_count, std::vector<cplx>(std::max(0, degree + 1),
                                           cplx(0.0, 0.0)));
  r.D.assign(std::max(0, degree + 1), 0.0);
  return r;
}

Boundary CoefficientSet::upper_boundary(int L) const {
  return L == 1 ? Boundary::pos_inf() : Boundary::at(thresholds[L - 2]);
}

Boundary CoefficientSet::lower_boundary(int L) const {
  return L == region_count() ? Boundary::neg_inf()
                             : Boundary::at(thresholds[L - 1]);
}

int CoefficientSet::region_index(double x) const {
  // thresholds are descending; find the first one <= x.
  auto it = std::lower_bound(thresholds.begin(), thresholds.end(), x,
                             [](double thr, double v) { return thr > v; });
  return static_cast<int>(it - thresholds.begin()) + 1;
}

void CoefficientSet::check_structure() const {
  if (region_count() != n + 1 ||
      static_cast<int>(thresholds.size()) != n) {
    throw PreconditionViolated("coefficient set: region/threshold count "
                               "does not match the stage index");
  }
  if (degree != (n - 1) * steps_per_stage + m - 1) {
    throw PreconditionViolated(
        "coefficient set: polynomial degree violates the degree law");
  }
  for (size_t l = 1; l < thresholds.size(); ++l) {
    if (!(thresholds[l] < thresholds[l - 1])) {
      throw MonotonicityViolation(
          "coefficient set: thresholds must be strictly decreasing");
    }
  }
  const RegionCoefficients &top = regions.front();
  if (top.E != 0.0 ||
      std::any_of(top.D.begin(), top.D.end(),
                  [](double d) { return d != 0.0; })) {
    throw PreconditionViolated("coefficient set: top region must have "
                               "D = 0 and E = 0");
  }
  const RegionCoefficients &bottom = regions.back();
  bool c_zero = true;
  for (const auto &row : bottom.C) {
    for (const auto &c : row) c_zero = c_zero && (c == cplx(0.0, 0.0));
  }
  if (bottom.A != 0.0 || bottom.B != 0.0 || !c_zero) {
    throw PreconditionViolated("coefficient set: bottom region must have "
                               "A = B = 0 and C = 0");
  }
}

namespace {

// The row polynomials cancel violently (huge coefficients, moderate
// values), so plain Horner noise would swamp the boundary-continuity
// diagnostic. Compensated Horner tracks the rounding of every product and
// sum and folds it back in, giving a result as accurate as the
// coefficients themselves allow.
inline double two_sum(double a, double b, double &err) {
  double s = a + b;
  double bb = s - a;
  err = (a - (s - bb)) + (b - bb);
  return s;
}

inline double two_prod(double a, double b, double &err) {
  double p = a * b;
  err = std::fma(a, b, -p);
  return p;
}

class CompensatedHorner {
 public:
  void seed(double top) {
    s_ = top;
    c_ = 0.0;
  }
  void step(double x, double coeff) {
    double e1, e2;
    double p = two_prod(s_, x, e1);
    s_ = two_sum(p, coeff, e2);
    c_ = c_ * x + (e1 + e2);
  }
  double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Value of the polynomial with the given complex coefficients at real x;
// real and imaginary parts run through their own compensation.
cplx comp_horner(const std::vector<cplx> &coeffs, double x) {
  const int n = static_cast<int>(coeffs.size());
  CompensatedHorner re, im;
  re.seed(coeffs[n - 1].real());
  im.seed(coeffs[n - 1].imag());
  for (int h = n - 2; h >= 0; --h) {
    re.step(x, coeffs[h].real());
    im.step(x, coeffs[h].imag());
  }
  return cplx(re.value(), im.value());
}

double comp_horner(const std::vector<double> &coeffs, double x) {
  const int n = static_cast<int>(coeffs.size());
  CompensatedHorner acc;
  acc.seed(coeffs[n - 1]);
  for (int h = n - 2; h >= 0; --h) acc.step(x, coeffs[h]);
  return acc.value();
}

template <class Coeff>
std::vector<Coeff> derivative_coeffs(const std::vector<Coeff> &coeffs) {
  std::vector<Coeff> out;
  out.reserve(coeffs.size() > 0 ? coeffs.size() - 1 : 0);
  for (size_t h = 1; h < coeffs.size(); ++h) {
    out.push_back(coeffs[h] * static_cast<double>(h));
  }
  return out;
}

bool horner(const std::vector<cplx> &coeffs, double x, cplx &value,
            cplx &deriv, bool want_deriv) {
  bool any = false;
  for (const auto &c : coeffs) any = any || (c != cplx(0.0, 0.0));
  if (!any) return false;
  value = comp_horner(coeffs, x);
  if (want_deriv) {
    std::vector<cplx> d = derivative_coeffs(coeffs);
    deriv = d.empty() ? cplx(0.0, 0.0) : comp_horner(d, x);
  }
  return true;
}

bool horner_real(const std::vector<double> &coeffs, double x, double &value,
                 double &deriv, bool want_deriv) {
  bool any = false;
  for (double c : coeffs) any = any || (c != 0.0);
  if (!any) return false;
  value = comp_horner(coeffs, x);
  if (want_deriv) {
    std::vector<double> d = derivative_coeffs(coeffs);
    deriv = d.empty() ? 0.0 : comp_horner(d, x);
  }
  return true;
}

}  // namespace

cplx evaluate_region(const CoefficientSet &set, int L, double x,
                     bool derivative) {
  const RegionCoefficients &reg = set.regions[L - 1];
  KahanSum<cplx> sum;
  if (!derivative && reg.A != 0.0) sum.add(cplx(reg.A, 0.0));
  if (reg.B != 0.0) sum.add(cplx(reg.B * std::exp(x), 0.0));
  for (int i = 0; i < set.spec.count(); ++i) {
    if (!set.spec.is_representative(i)) continue;
    cplx pv(0.0, 0.0), pd(0.0, 0.0);
    if (!horner(reg.C[i], x, pv, pd, derivative)) continue;
    const cplx xi = set.spec.xi[i];
    cplx term = std::exp(-xi * x) * (derivative ? pd - xi * pv : pv);
    if (set.spec.is_real_root(i)) {
      sum.add(term);
    } else {
      sum.add(cplx(2.0 * term.real(), 0.0));
    }
  }
  {
    double pv = 0.0, pd = 0.0;
    if (horner_real(reg.D, x, pv, pd, derivative)) {
      double w = std::exp(set.spec.phi_p * x);
      sum.add(cplx(w * (derivative ? pd + set.spec.phi_p * pv : pv), 0.0));
    }
  }
  if (reg.E != 0.0) {
    double w = reg.E * std::exp(set.phi_alpha * x);
    sum.add(cplx(derivative ? set.phi_alpha * w : w, 0.0));
  }
  return sum.value();
}

namespace {

double real_with_check(cplx v, const Tolerances &tol) {
  if (std::abs(v.imag()) > tol.imag_residue * (1.0 + std::abs(v.real()))) {
    std::ostringstream os;
    os << "evaluate: imaginary residue " << v.imag() << " against real part "
       << v.real();
    throw ImaginaryResidue(os.str());
  }
  return v.real();
}

}  // namespace

double evaluate(const CoefficientSet &set, double x, const Tolerances &tol) {
  return real_with_check(
      evaluate_region(set, set.region_index(x), x, false), tol);
}

double evaluate_derivative(const CoefficientSet &set, double x,
                           const Tolerances &tol) {
  return real_with_check(
      evaluate_region(set, set.region_index(x), x, true), tol);
}

double max_boundary_discontinuity(const CoefficientSet &set,
                                  const Tolerances &tol) {
  double worst = 0.0;
  for (int l = 1; l <= set.n; ++l) {
    const double a = set.thresholds[l - 1];
    cplx above = evaluate_region(set, l, a + tol.continuity_eps, false);
    cplx below = evaluate_region(set, l + 1, a - tol.continuity_eps, false);
    if (!std::isfinite(above.real()) || !std::isfinite(below.real())) {
      return std::numeric_limits<double>::infinity();
    }
    double gap = std::abs(above.real() - below.real());
    double scale = std::max(std::abs(above.real()), std::abs(below.real()));
    worst = std::max(worst, gap / (1.0 + scale));
  }
  return worst;
}

}  // namespace refract

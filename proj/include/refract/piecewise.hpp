#pragma once

#include <vector>

#include "refract/numerics.hpp"
#include "refract/spectral.hpp"

namespace refract {

// Region boundary on the extended real line. The infinite sentinels are a
// distinct state, never large finite floats: the integral formulas for
// unbounded regions are structurally different, not limits.
struct Boundary {
  enum class Kind { NegInf, Finite, PosInf };
  Kind kind = Kind::Finite;
  double value = 0.0;

  static Boundary neg_inf() { return {Kind::NegInf, 0.0}; }
  static Boundary pos_inf() { return {Kind::PosInf, 0.0}; }
  static Boundary at(double x) { return {Kind::Finite, x}; }
  bool finite() const { return kind == Kind::Finite; }
};

// Coefficients of one region's function
//   f(x) = A + B e^x + sum_i sum_{h=0..I} C[i][h] e^{-xi_i x} x^h
//        + sum_{h=0..I} D[h] e^{phi_p x} x^h + E e^{phi_alpha x}.
// C entries are complex (conjugate pairs mirror each other); A, B, D, E are
// real after the step's residue checks.
struct RegionCoefficients {
  double A = 0.0;
  double B = 0.0;
  std::vector<std::vector<cplx>> C;
  std::vector<double> D;
  double E = 0.0;

  static RegionCoefficients zero(int root_count, int degree);
};

// Piecewise representation of one intermediate function in the backward
// recursion: stage n, sub-step m, with n thresholds splitting the line
// into n+1 regions (region 1 on top).
struct CoefficientSet {
  int n = 1;
  int m = 0;
  int steps_per_stage = 1;
  int degree = -1;
  std::vector<double> thresholds;
  std::vector<RegionCoefficients> regions;
  SpectralData spec;
  double phi_alpha = 0.0;
  double lambda = 0.0;

  int region_count() const { return static_cast<int>(regions.size()); }
  Boundary upper_boundary(int L) const;
  Boundary lower_boundary(int L) const;
  // 1-based region index; x equal to a threshold resolves to the region
  // above it (the payoff side).
  int region_index(double x) const;

  void check_structure() const;
};

// Value / derivative of a specific region's function, regardless of
// whether x lies inside that region. Used for boundary diagnostics and
// for root-finding on the bottom region's analytic continuation.
cplx evaluate_region(const CoefficientSet &set, int L, double x,
                     bool derivative);

double evaluate(const CoefficientSet &set, double x,
                const Tolerances &tol = {});
double evaluate_derivative(const CoefficientSet &set, double x,
                           const Tolerances &tol = {});

// Largest scaled jump |f_L - f_{L+1}| / (1 + |f|) over all probes at
// threshold +- eps. Returns +inf if an evaluation is not finite.
double max_boundary_discontinuity(const CoefficientSet &set,
                                  const Tolerances &tol = {});

}  // namespace refract

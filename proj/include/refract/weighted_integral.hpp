#pragma once

#include <vector>

#include "refract/piecewise.hpp"

namespace refract {

// Which exponential weight multiplies the region function under the
// integral sign: e^{-phi_p y} (Phi) or e^{+xi_i y} (Xi, for root i).
enum class Weight { Phi, Xi };

// Coefficients R of the definite integral
//   integral_s^t P(y) e^{-w y} dy = sum_h R_h (s^h e^{-w s} - t^h e^{-w t})
// for a polynomial P given by its coefficients. Backward recurrence, so the
// factorial ratios never appear explicitly.
std::vector<cplx> antiderivative_coeffs(const std::vector<cplx> &poly,
                                        cplx w);

// sum_h R_h x^h e^{-w x}, one boundary's share of the integral above.
cplx boundary_sum(const std::vector<cplx> &R, cplx w, double x);

// Closed form of integral_s^t weight(y) f(y) dy for one region's
// polynomial-exponential f. Infinite limits use structurally different
// formulas and are only legal where the discarded terms vanish:
//   t = +inf requires mode Phi, phi_p > 1, and D = 0, E = 0;
//   s = -inf requires mode Xi and A = B = 0, C = 0.
cplx weighted_integral(const RegionCoefficients &reg, int degree,
                       const SpectralData &sd, double phi_alpha, Boundary s,
                       Boundary t, Weight mode, int root = -1);

}  // namespace refract

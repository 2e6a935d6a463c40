#pragma once

#include <vector>

#include "refract/levy_model.hpp"
#include "refract/numerics.hpp"

namespace refract {

// Root system of psi(s) = p for a killing rate p > 0. xi holds the
// negatives of the roots with negative real part, so Re(xi_i) > 0, and
// kappa_i = -1/psi'(-xi_i). Complex entries come in adjacent conjugate
// pairs (the +Im member first); conj_index maps each entry to its partner
// (itself for real roots).
struct SpectralData {
  double p = 0.0;
  double phi_p = 0.0;
  double phi_prime_p = 0.0;
  std::vector<cplx> xi;
  std::vector<cplx> kappa;
  std::vector<int> conj_index;
  double max_root_residual = 0.0;

  int count() const { return static_cast<int>(xi.size()); }
  bool is_real_root(int i) const { return conj_index[i] == i; }
  // True for real roots and for the +Im member of each pair; evaluation
  // loops visit only representatives and double the real part for pairs.
  bool is_representative(int i) const { return conj_index[i] >= i; }
};

// Clears psi(s) = p to a polynomial, takes companion-matrix eigenvalues,
// polishes each with Newton steps on psi(s) - p, and classifies the roots.
SpectralData spectral_roots(const LevyModel &model, double p,
                            const Tolerances &tol = {});

// W(x) = phi_prime_p e^{phi_p x} - sum_i kappa_i e^{-xi_i x} on x >= 0,
// zero on x < 0.
double scale_function(const SpectralData &sd, double x,
                      const Tolerances &tol = {});

// Density of the expected discounted occupation measure of X started at 0:
// phi_prime_p e^{-phi_p z} for z > 0, sum_i kappa_i e^{xi_i z} for z <= 0.
double resolvent_density(const SpectralData &sd, double z,
                         const Tolerances &tol = {});

}  // namespace refract

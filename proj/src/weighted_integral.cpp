#include "refract/weighted_integral.hpp"

#include <algorithm>
#include <cmath>

#include "refract/errors.hpp"

namespace refract {

std::vector<cplx> antiderivative_coeffs(const std::vector<cplx> &poly,
                                        cplx w) {
  std::vector<cplx> R(poly.size());
  cplx carry(0.0, 0.0);
  for (int h = static_cast<int>(poly.size()) - 1; h >= 0; --h) {
    R[h] = (poly[h] + static_cast<double>(h + 1) * carry) / w;
    carry = R[h];
  }
  return R;
}

cplx boundary_sum(const std::vector<cplx> &R, cplx w, double x) {
  cplx weight = std::exp(-w * x);
  KahanSum<cplx> sum;
  double xpow = 1.0;
  for (size_t h = 0; h < R.size(); ++h) {
    sum.add(R[h] * xpow * weight);
    xpow *= x;
  }
  return sum.value();
}

namespace {

// integral of P(y) between finite limits (the weight has cancelled).
cplx plain_polynomial_part(const std::vector<cplx> &coeffs, double s,
                           double t) {
  KahanSum<cplx> sum;
  double spow = 1.0, tpow = 1.0;
  for (size_t h = 0; h < coeffs.size(); ++h) {
    spow *= s;
    tpow *= t;
    sum.add(coeffs[h] * ((tpow - spow) / static_cast<double>(h + 1)));
  }
  return sum.value();
}

}  // namespace

cplx weighted_integral(const RegionCoefficients &reg, int degree,
                       const SpectralData &sd, double phi_alpha, Boundary s,
                       Boundary t, Weight mode, int root) {
  (void)degree;
  if (s.kind == Boundary::Kind::PosInf || t.kind == Boundary::Kind::NegInf) {
    throw DomainError("weighted_integral: bounds reversed");
  }
  if (mode == Weight::Xi && (root < 0 || root >= sd.count())) {
    throw PreconditionViolated("weighted_integral: Xi mode needs a root");
  }
  if (s.finite() && t.finite()) {
    if (s.value > t.value) {
      throw DomainError("weighted_integral: lower bound above upper bound");
    }
    if (s.value == t.value) return cplx(0.0, 0.0);
  }

  const bool d_zero = std::all_of(reg.D.begin(), reg.D.end(),
                                  [](double d) { return d == 0.0; });
  bool c_zero = true;
  for (const auto &row : reg.C) {
    for (const auto &c : row) c_zero = c_zero && (c == cplx(0.0, 0.0));
  }

  if (t.kind == Boundary::Kind::PosInf) {
    if (mode != Weight::Phi) {
      throw PreconditionViolated(
          "weighted_integral: unbounded upper limit diverges under the Xi "
          "weight");
    }
    if (sd.phi_p <= 1.0) {
      throw PreconditionViolated(
          "weighted_integral: upper limit +inf needs phi_p > 1");
    }
    if (!d_zero || reg.E != 0.0) {
      throw PreconditionViolated(
          "weighted_integral: upper limit +inf needs D = 0 and E = 0");
    }
  }
  if (s.kind == Boundary::Kind::NegInf) {
    if (mode != Weight::Xi) {
      throw PreconditionViolated(
          "weighted_integral: unbounded lower limit diverges under the Phi "
          "weight");
    }
    if (reg.A != 0.0 || reg.B != 0.0 || !c_zero) {
      throw PreconditionViolated(
          "weighted_integral: lower limit -inf needs A = B = 0 and C = 0");
    }
  }

  KahanSum<cplx> total;
  const int nroots = sd.count();

  if (mode == Weight::Phi) {
    const double phip = sd.phi_p;
    // All surviving exponents e^{-w y} have Re(w) > 0, so an infinite
    // upper limit just drops that boundary's share.
    auto edge = [&](cplx w) {
      cplx out = std::exp(-w * s.value);
      if (t.finite()) out -= std::exp(-w * t.value);
      return out;
    };
    if (reg.A != 0.0) total.add(reg.A * edge(phip) / phip);
    if (reg.B != 0.0) total.add(reg.B * edge(phip - 1.0) / (phip - 1.0));
    if (!c_zero) {
      for (int j = 0; j < nroots; ++j) {
        const cplx w = phip + sd.xi[j];
        std::vector<cplx> R = antiderivative_coeffs(reg.C[j], w);
        total.add(boundary_sum(R, w, s.value));
        if (t.finite()) total.add(-boundary_sum(R, w, t.value));
      }
    }
    if (!d_zero) {
      std::vector<cplx> dc(reg.D.begin(), reg.D.end());
      total.add(plain_polynomial_part(dc, s.value, t.value));
    }
    if (reg.E != 0.0) {
      total.add(reg.E * edge(phip - phi_alpha) / (phip - phi_alpha));
    }
    return total.value();
  }

  const cplx xi = sd.xi[root];
  // Exponents e^{+w y} with Re(w) > 0: an infinite lower limit drops that
  // boundary's share.
  auto edge = [&](cplx w) {
    cplx out = std::exp(w * t.value);
    if (s.finite()) out -= std::exp(w * s.value);
    return out;
  };
  if (reg.A != 0.0) total.add(reg.A * edge(xi) / xi);
  if (reg.B != 0.0) total.add(reg.B * edge(xi + 1.0) / (xi + 1.0));
  if (!c_zero) {
    total.add(plain_polynomial_part(reg.C[root], s.value, t.value));
    for (int j = 0; j < nroots; ++j) {
      if (j == root) continue;
      const cplx w = sd.xi[j] - xi;
      std::vector<cplx> R = antiderivative_coeffs(reg.C[j], w);
      total.add(boundary_sum(R, w, s.value));
      if (t.finite()) total.add(-boundary_sum(R, w, t.value));
    }
  }
  if (!d_zero) {
    const cplx w = -(xi + sd.phi_p);
    std::vector<cplx> dc(reg.D.begin(), reg.D.end());
    std::vector<cplx> R = antiderivative_coeffs(dc, w);
    if (s.finite()) total.add(boundary_sum(R, w, s.value));
    total.add(-boundary_sum(R, w, t.value));
  }
  if (reg.E != 0.0) {
    total.add(reg.E * edge(xi + phi_alpha) / (xi + phi_alpha));
  }
  return total.value();
}

}  // namespace refract

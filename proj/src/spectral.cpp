#include "refract/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "refract/errors.hpp"

namespace refract {

namespace {

// Coefficients ascending in degree: poly[k] multiplies s^k.
using Poly = std::vector<double>;

Poly poly_mul(const Poly &a, const Poly &b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

void poly_axpy(Poly &acc, double scale, const Poly &x) {
  if (acc.size() < x.size()) acc.resize(x.size(), 0.0);
  for (size_t i = 0; i < x.size(); ++i) acc[i] += scale * x[i];
}

// Leverrier recursion: returns the monic characteristic polynomial of A
// and fills adj_terms[k] = alpha^T M_{d-k} t, the s^k coefficient of
// alpha^T adj(sI - A) t.
Poly characteristic_and_adjugate(const Eigen::MatrixXd &A,
                                 const Eigen::VectorXd &alpha,
                                 const Eigen::VectorXd &t, Poly &adj_terms) {
  const int d = static_cast<int>(A.rows());
  Poly charpoly(d + 1, 0.0);
  charpoly[d] = 1.0;
  adj_terms.assign(d, 0.0);

  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d);
  double c = -A.trace();
  charpoly[d - 1] = c;
  adj_terms[d - 1] = alpha.dot(M * t);
  for (int k = 1; k < d; ++k) {
    M = A * M + c * Eigen::MatrixXd::Identity(d, d);
    c = -(A * M).trace() / static_cast<double>(k + 1);
    charpoly[d - 1 - k] = c;
    adj_terms[d - 1 - k] = alpha.dot(M * t);
  }
  return charpoly;
}

// psi(s) - p with denominators cleared:
//   (drift*s + sigma^2 s^2/2 - (rho + p)) * det(sI - T) + rho * N(s)
Poly cleared_polynomial(const LevyModel &model, double p) {
  Poly adj_terms;
  Poly charpoly = characteristic_and_adjugate(
      model.jumps.T, model.jumps.alpha, model.jumps.exit_vector(), adj_terms);
  Poly quad = {-(model.rho + p), model.drift_tilde,
               0.5 * model.sigma * model.sigma};
  while (!quad.empty() && quad.back() == 0.0) quad.pop_back();
  Poly out = poly_mul(quad, charpoly);
  poly_axpy(out, model.rho, adj_terms);
  while (out.size() > 1 && out.back() == 0.0) out.pop_back();
  return out;
}

std::vector<cplx> companion_eigenvalues(const Poly &poly) {
  const int n = static_cast<int>(poly.size()) - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) comp(k, n - 1) = -poly[k] / poly[n];
  for (int k = 1; k < n; ++k) comp(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, false);
  std::vector<cplx> roots(n);
  for (int k = 0; k < n; ++k) roots[k] = solver.eigenvalues()(k);
  return roots;
}

cplx psi_guarded(const LevyModel &model, cplx s) {
  // A companion eigenvalue can land on an eigenvalue of T, where psi has
  // a pole; nudge off it and let Newton continue.
  try {
    return laplace_exponent(model, s);
  } catch (const SingularResolvent &) {
    return laplace_exponent(model, s + cplx(1e-10, 1e-10));
  }
}

cplx polish_root(const LevyModel &model, double p, cplx s0) {
  cplx best = s0;
  double best_res = std::abs(psi_guarded(model, s0) - p);
  cplx s = s0;
  for (int it = 0; it < 20; ++it) {
    cplx f = psi_guarded(model, s) - p;
    double res = std::abs(f);
    if (res < best_res) {
      best = s;
      best_res = res;
    }
    if (res == 0.0) break;
    cplx df;
    try {
      df = laplace_exponent_derivative(model, s);
    } catch (const SingularResolvent &) {
      break;
    }
    if (df == cplx(0.0, 0.0)) break;
    cplx next = s - f / df;
    if (next == s) break;
    s = next;
  }
  cplx f = psi_guarded(model, s) - p;
  if (std::abs(f) < best_res) best = s;
  return best;
}

}  // namespace

SpectralData spectral_roots(const LevyModel &model, double p,
                            const Tolerances &tol) {
  if (!(p > 0.0)) throw DomainError("spectral_roots: p must be > 0");

  Poly poly = cleared_polynomial(model, p);
  const int expected_degree =
      model.jumps.dim() + (model.sigma > 0.0 ? 2 : 1);
  if (static_cast<int>(poly.size()) - 1 != expected_degree) {
    std::ostringstream os;
    os << "spectral_roots: cleared polynomial has degree "
       << poly.size() - 1 << ", expected " << expected_degree;
    throw CountMismatch(os.str());
  }

  std::vector<cplx> roots = companion_eigenvalues(poly);
  for (auto &r : roots) {
    r = polish_root(model, p, r);
    if (std::abs(r.imag()) < tol.real_snap * (1.0 + std::abs(r.real()))) {
      r = cplx(r.real(), 0.0);
      r = polish_root(model, p, r);
    }
  }

  double max_residual = 0.0;
  for (const auto &r : roots) {
    double res = std::abs(psi_guarded(model, r) - p);
    max_residual = std::max(max_residual, res);
  }
  if (max_residual > tol.root_residual * std::max(1.0, std::abs(p))) {
    std::ostringstream os;
    os << "spectral_roots: polished residual " << max_residual
       << " exceeds tolerance";
    throw NoRoot(os.str());
  }

  for (size_t i = 0; i < roots.size(); ++i) {
    for (size_t j = i + 1; j < roots.size(); ++j) {
      if (std::abs(roots[i] - roots[j]) < tol.root_separation) {
        std::ostringstream os;
        os << "spectral_roots: roots " << i << " and " << j
           << " closer than separation threshold; the closed forms need "
              "simple roots";
        throw RootMultiplicity(os.str());
      }
    }
  }

  std::vector<cplx> lower;
  std::vector<double> upper_real;
  double max_re_other = -1e300;
  for (const auto &r : roots) {
    if (r.real() < 0.0) {
      lower.push_back(r);
    } else if (r.imag() == 0.0) {
      upper_real.push_back(r.real());
    } else {
      max_re_other = std::max(max_re_other, r.real());
    }
  }
  const int expected_lower = model.jumps.dim() + (model.sigma > 0.0 ? 1 : 0);
  if (static_cast<int>(lower.size()) != expected_lower ||
      upper_real.empty()) {
    std::ostringstream os;
    os << "spectral_roots: found " << lower.size()
       << " roots with negative real part and " << upper_real.size()
       << " positive real roots; expected " << expected_lower << " and 1";
    throw CountMismatch(os.str());
  }
  double phi_p = *std::max_element(upper_real.begin(), upper_real.end());
  if (upper_real.size() > 1 || phi_p <= max_re_other) {
    throw CountMismatch(
        "spectral_roots: the largest positive real root does not dominate "
        "the other non-negative real parts");
  }

  SpectralData sd;
  sd.p = p;
  sd.phi_p = phi_p;
  sd.phi_prime_p = 1.0 / laplace_exponent_derivative(model, phi_p);
  sd.max_root_residual = max_residual;

  std::vector<cplx> xi(lower.size());
  for (size_t i = 0; i < lower.size(); ++i) xi[i] = -lower[i];
  std::sort(xi.begin(), xi.end(), [](const cplx &a, const cplx &b) {
    if (a.real() != b.real()) return a.real() < b.real();
    if (std::abs(a.imag()) != std::abs(b.imag()))
      return std::abs(a.imag()) < std::abs(b.imag());
    return a.imag() > b.imag();
  });

  const int n = static_cast<int>(xi.size());
  sd.xi.resize(n);
  sd.kappa.resize(n);
  sd.conj_index.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (xi[i].imag() == 0.0) {
      sd.xi[i] = xi[i];
      sd.conj_index[i] = i;
      continue;
    }
    if (xi[i].imag() > 0.0) {
      if (i + 1 >= n ||
          std::abs(xi[i + 1] - std::conj(xi[i])) >
              tol.conj_pair * (1.0 + std::abs(xi[i]))) {
        throw CountMismatch(
            "spectral_roots: complex root without a conjugate partner");
      }
      sd.xi[i] = xi[i];
      sd.xi[i + 1] = std::conj(xi[i]);
      sd.conj_index[i] = i + 1;
      sd.conj_index[i + 1] = i;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!sd.is_representative(i)) {
      sd.kappa[i] = std::conj(sd.kappa[sd.conj_index[i]]);
      continue;
    }
    cplx dpsi = laplace_exponent_derivative(model, -sd.xi[i]);
    sd.kappa[i] = -1.0 / dpsi;
    if (sd.is_real_root(i)) {
      if (std::abs(sd.kappa[i].imag()) >
          tol.imag_residue * (1.0 + std::abs(sd.kappa[i]))) {
        throw ImaginaryResidue(
            "spectral_roots: weight of a real root is not real");
      }
      sd.kappa[i] = cplx(sd.kappa[i].real(), 0.0);
    }
  }
  return sd;
}

namespace {

double check_real(cplx value, double scale, const Tolerances &tol,
                  const char *what) {
  if (std::abs(value.imag()) > tol.imag_residue * (1.0 + scale)) {
    std::ostringstream os;
    os << what << ": imaginary residue " << value.imag();
    throw ImaginaryResidue(os.str());
  }
  return value.real();
}

}  // namespace

double scale_function(const SpectralData &sd, double x,
                      const Tolerances &tol) {
  if (x < 0.0) return 0.0;
  KahanSum<cplx> sum;
  sum.add(cplx(sd.phi_prime_p * std::exp(sd.phi_p * x), 0.0));
  for (int i = 0; i < sd.count(); ++i) {
    if (!sd.is_representative(i)) continue;
    cplx term = sd.kappa[i] * std::exp(-sd.xi[i] * x);
    if (sd.is_real_root(i)) {
      sum.add(-term);
    } else {
      sum.add(cplx(-2.0 * term.real(), 0.0));
    }
  }
  return check_real(sum.value(), std::abs(sum.value()), tol,
                    "scale_function");
}

double resolvent_density(const SpectralData &sd, double z,
                         const Tolerances &tol) {
  if (z > 0.0) return sd.phi_prime_p * std::exp(-sd.phi_p * z);
  KahanSum<cplx> sum;
  for (int i = 0; i < sd.count(); ++i) {
    if (!sd.is_representative(i)) continue;
    cplx term = sd.kappa[i] * std::exp(sd.xi[i] * z);
    if (sd.is_real_root(i)) {
      sum.add(term);
    } else {
      sum.add(cplx(2.0 * term.real(), 0.0));
    }
  }
  return check_real(sum.value(), std::abs(sum.value()), tol,
                    "resolvent_density");
}

}  // namespace refract

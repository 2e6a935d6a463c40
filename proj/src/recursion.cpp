#include "refract/recursion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "refract/errors.hpp"
#include "refract/weighted_integral.hpp"

namespace refract {

double first_threshold(double phi_alpha, double K) {
  if (!(phi_alpha > 1.0)) {
    throw DomainError("first_threshold: phi_alpha must exceed 1");
  }
  if (!(K > 0.0)) throw DomainError("first_threshold: K must be positive");
  return std::log(phi_alpha * K / (phi_alpha - 1.0));
}

CoefficientSet base_case(const SpectralData &spec, double phi_alpha,
                         double K, int steps_per_stage, double lambda) {
  CoefficientSet set;
  set.n = 1;
  set.m = 0;
  set.steps_per_stage = steps_per_stage;
  set.degree = -1;
  set.spec = spec;
  set.phi_alpha = phi_alpha;
  set.lambda = lambda;
  const double a1 = first_threshold(phi_alpha, K);
  set.thresholds = {a1};
  set.regions.assign(2, RegionCoefficients::zero(spec.count(), -1));
  set.regions[0].A = -K;
  set.regions[0].B = 1.0;
  set.regions[1].E = (std::exp(a1) - K) * std::exp(-phi_alpha * a1);
  set.check_structure();
  return set;
}

namespace {

double scaled_imag(cplx v) {
  return std::abs(v.imag()) / (1.0 + std::abs(v.real()));
}

double store_real(cplx v, const Tolerances &tol, double &worst,
                  const char *slot) {
  double res = scaled_imag(v);
  worst = std::max(worst, res);
  if (res > tol.imag_residue) {
    std::ostringstream os;
    os << "resolvent_step: " << slot << " accumulated imaginary residue "
       << v.imag() << " against " << v.real();
    throw ImaginaryResidue(os.str());
  }
  return v.real();
}

}  // namespace

CoefficientSet resolvent_step(const CoefficientSet &in, const Tolerances &tol,
                              StepDiagnostics *diag) {
  in.check_structure();
  if (in.m >= in.steps_per_stage) {
    throw PreconditionViolated(
        "resolvent_step: sub-step counter already at its stage maximum");
  }
  const SpectralData &sd = in.spec;
  const int R = sd.count();
  const int n = in.n;
  const int nreg = n + 1;
  const int Iold = in.degree;
  const int Inew = Iold + 1;
  const double phip = sd.phi_p;
  const double dphip = sd.phi_prime_p;
  const double phia = in.phi_alpha;
  const double lam = in.lambda;

  // Root-only sums feeding the A/B/E slots.
  KahanSum<cplx> sum_a, sum_b, sum_e;
  for (int i = 0; i < R; ++i) {
    sum_a.add(sd.kappa[i] / sd.xi[i]);
    sum_b.add(sd.kappa[i] / (sd.xi[i] + 1.0));
    sum_e.add(sd.kappa[i] / (sd.xi[i] + phia));
  }
  const cplx SA = sum_a.value(), SB = sum_b.value(), SE = sum_e.value();

  // Cross-region integrals. wphi[l] (weight Phi) feeds regions below l;
  // wxi[l][i] (weight Xi) feeds regions above l.
  std::vector<cplx> wphi(nreg + 1, cplx(0.0, 0.0));
  std::vector<std::vector<cplx>> wxi(nreg + 2,
                                     std::vector<cplx>(R, cplx(0.0, 0.0)));
  for (int l = 1; l <= n; ++l) {
    wphi[l] = weighted_integral(in.regions[l - 1], Iold, sd, phia,
                                in.lower_boundary(l), in.upper_boundary(l),
                                Weight::Phi);
  }
  for (int l = 2; l <= nreg; ++l) {
    for (int i = 0; i < R; ++i) {
      if (!sd.is_representative(i)) {
        wxi[l][i] = std::conj(wxi[l][sd.conj_index[i]]);
        continue;
      }
      wxi[l][i] = weighted_integral(in.regions[l - 1], Iold, sd, phia,
                                    in.lower_boundary(l),
                                    in.upper_boundary(l), Weight::Xi, i);
    }
  }
  // prefix[L] = sum_{l < L} wphi[l]; suffix[L][i] = sum_{l > L} wxi[l][i].
  std::vector<cplx> prefix(nreg + 1, cplx(0.0, 0.0));
  for (int L = 2; L <= nreg; ++L) prefix[L] = prefix[L - 1] + wphi[L - 1];
  std::vector<std::vector<cplx>> suffix(nreg + 1,
                                        std::vector<cplx>(R, cplx(0.0, 0.0)));
  for (int L = nreg - 1; L >= 1; --L) {
    for (int i = 0; i < R; ++i) suffix[L][i] = suffix[L + 1][i] + wxi[L + 1][i];
  }

  CoefficientSet out = in;
  out.m = in.m + 1;
  out.degree = Inew;
  out.regions.assign(nreg, RegionCoefficients::zero(R, Inew));
  double worst_imag = 0.0;

  for (int L = 1; L <= nreg; ++L) {
    const RegionCoefficients &f = in.regions[L - 1];
    RegionCoefficients &g = out.regions[L - 1];

    // Antiderivative tails of this region's rows against each weight.
    std::vector<std::vector<cplx>> SC(R);
    for (int j = 0; j < R; ++j) {
      SC[j] = antiderivative_coeffs(f.C[j], phip + sd.xi[j]);
    }
    std::vector<cplx> fD(f.D.begin(), f.D.end());

    if (L <= n) {
      const double b = in.thresholds[L - 1];

      // Per-root pieces of the lower-boundary collection.
      std::vector<std::vector<std::vector<cplx>>> XC(R);
      std::vector<std::vector<cplx>> XD(R);
      std::vector<cplx> diag0(R, cplx(0.0, 0.0));
      for (int i = 0; i < R; ++i) {
        XC[i].resize(R);
        const cplx xi_i = sd.xi[i];
        for (int j = 0; j < R; ++j) {
          if (j == i) continue;
          XC[i][j] = antiderivative_coeffs(f.C[j], sd.xi[j] - xi_i);
        }
        XD[i] = antiderivative_coeffs(fD, -(xi_i + phip));

        KahanSum<cplx> acc;
        if (f.A != 0.0) acc.add(-f.A * std::exp(xi_i * b) / xi_i);
        if (f.B != 0.0) {
          acc.add(-f.B * std::exp((xi_i + 1.0) * b) / (xi_i + 1.0));
        }
        {
          double bpow = 1.0;
          for (int h = 0; h <= Iold; ++h) {
            bpow *= b;
            if (f.C[i][h] != cplx(0.0, 0.0)) {
              acc.add(-f.C[i][h] * (bpow / static_cast<double>(h + 1)));
            }
          }
        }
        for (int j = 0; j < R; ++j) {
          if (j != i) acc.add(boundary_sum(XC[i][j], sd.xi[j] - xi_i, b));
        }
        acc.add(boundary_sum(XD[i], -(xi_i + phip), b));
        if (f.E != 0.0) {
          acc.add(-f.E * std::exp((xi_i + phia) * b) / (xi_i + phia));
        }
        diag0[i] = acc.value();
      }

      g.A = lam * store_real(dphip * (f.A / phip) + f.A * SA, tol,
                             worst_imag, "A");
      g.B = lam * store_real(dphip * (f.B / (phip - 1.0)) + f.B * SB, tol,
                             worst_imag, "B");
      for (int j = 0; j < R; ++j) {
        for (int h = 0; h <= Inew; ++h) {
          KahanSum<cplx> acc;
          if (h <= Iold) {
            acc.add(dphip * SC[j][h]);
            for (int i = 0; i < R; ++i) {
              if (i != j) acc.add(-sd.kappa[i] * XC[i][j][h]);
            }
          }
          if (h >= 1) {
            acc.add(sd.kappa[j] * f.C[j][h - 1] / static_cast<double>(h));
          } else {
            acc.add(sd.kappa[j] * diag0[j]);
            acc.add(sd.kappa[j] * suffix[L][j]);
          }
          g.C[j][h] = lam * acc.value();
        }
      }
    }

    if (L >= 2) {
      const double up = in.thresholds[L - 2];
      KahanSum<cplx> hat_d0;
      if (f.A != 0.0) hat_d0.add(-f.A * std::exp(-phip * up) / phip);
      if (f.B != 0.0) {
        hat_d0.add(-f.B * std::exp(-(phip - 1.0) * up) / (phip - 1.0));
      }
      for (int j = 0; j < R; ++j) {
        if (!SC[j].empty()) {
          hat_d0.add(-boundary_sum(SC[j], phip + sd.xi[j], up));
        }
      }
      {
        double upow = 1.0;
        for (int h = 0; h <= Iold; ++h) {
          upow *= up;
          if (f.D[h] != 0.0) {
            hat_d0.add(f.D[h] * (upow / static_cast<double>(h + 1)));
          }
        }
      }
      if (f.E != 0.0) {
        hat_d0.add(-f.E * std::exp(-(phip - phia) * up) / (phip - phia));
      }

      // Check-side convolution of the D row, aggregated over roots.
      std::vector<cplx> dcheck;
      if (Iold >= 0) {
        std::vector<KahanSum<cplx>> acc(Iold + 1);
        for (int i = 0; i < R; ++i) {
          std::vector<cplx> XDi =
              antiderivative_coeffs(fD, -(sd.xi[i] + phip));
          for (int h = 0; h <= Iold; ++h) acc[h].add(-sd.kappa[i] * XDi[h]);
        }
        dcheck.resize(Iold + 1);
        for (int h = 0; h <= Iold; ++h) dcheck[h] = acc[h].value();
      }

      for (int h = 0; h <= Inew; ++h) {
        KahanSum<cplx> acc;
        if (h == 0) {
          acc.add(dphip * hat_d0.value());
          acc.add(dphip * prefix[L]);
        } else {
          acc.add(dphip * (-f.D[h - 1] / static_cast<double>(h)));
        }
        if (h <= Iold) acc.add(dcheck[h]);
        g.D[h] = lam * store_real(acc.value(), tol, worst_imag, "D");
      }
      g.E = lam * store_real(dphip * (f.E / (phip - phia)) + f.E * SE, tol,
                             worst_imag, "E");
    }
  }

  // Conjugate-pair hygiene: partners must mirror the representatives to
  // working accuracy, then they are made exact mirrors; real roots must
  // carry only imaginary dust.
  for (int L = 1; L <= nreg; ++L) {
    RegionCoefficients &g = out.regions[L - 1];
    for (int j = 0; j < R; ++j) {
      if (sd.is_real_root(j)) {
        for (int h = 0; h <= Inew; ++h) {
          double res = scaled_imag(g.C[j][h]);
          worst_imag = std::max(worst_imag, res);
          if (res > tol.imag_residue) {
            throw ImaginaryResidue(
                "resolvent_step: real-root coefficient has imaginary part");
          }
          g.C[j][h] = cplx(g.C[j][h].real(), 0.0);
        }
      } else if (sd.is_representative(j)) {
        const int k = sd.conj_index[j];
        for (int h = 0; h <= Inew; ++h) {
          double mismatch = std::abs(g.C[k][h] - std::conj(g.C[j][h])) /
                            (1.0 + std::abs(g.C[j][h]));
          worst_imag = std::max(worst_imag, mismatch);
          if (mismatch > tol.conj_pair) {
            throw ImaginaryResidue(
                "resolvent_step: conjugate pair coefficients diverged");
          }
          g.C[k][h] = std::conj(g.C[j][h]);
        }
      }
    }
  }

  out.check_structure();
  const double disc = max_boundary_discontinuity(out, tol);
  if (diag) {
    diag->stage = out.n;
    diag->substep = out.m;
    diag->continuity_residual = disc;
    diag->imag_residue = worst_imag;
  }
  if (disc > tol.continuity_tol) {
    std::ostringstream os;
    os << "value function discontinuous across a threshold (scaled jump "
       << disc << ") at stage " << out.n << ", sub-step " << out.m
       << "; double precision cannot carry this configuration";
    throw PrecisionBreakdown(os.str(), out.n, out.m);
  }
  return out;
}

namespace {

struct FocFunction {
  const CoefficientSet &set;
  double K;
  double phi_alpha;
  int bottom;

  double payoff_tilde(double a) const {
    return (std::exp(a) - K) +
           evaluate_region(set, bottom, a, false).real();
  }
  double operator()(double a) const {
    double u = evaluate_region(set, bottom, a, false).real();
    double du = evaluate_region(set, bottom, a, true).real();
    double ea = std::exp(a);
    return (ea + du) - phi_alpha * ((ea - K) + u);
  }
};

double refine_root(const FocFunction &g, double a, double b, double ga,
                   double gb) {
  for (int it = 0; it < 200; ++it) {
    double x = (gb != ga) ? b - gb * (b - a) / (gb - ga) : 0.5 * (a + b);
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    double gx = g(x);
    if (std::abs(gx) <= 1e-12 || gx == 0.0) return x;
    if ((gx > 0.0) == (ga > 0.0)) {
      a = x;
      ga = gx;
    } else {
      b = x;
      gb = gx;
    }
    if (b - a <=
        4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(b))) {
      break;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::pair<double, CoefficientSet> advance_stage(const CoefficientSet &in,
                                                double K,
                                                const Tolerances &tol,
                                                StageDiagnostics *diag) {
  in.check_structure();
  if (in.m != in.steps_per_stage) {
    throw PreconditionViolated(
        "advance_stage: the stage must have completed all resolvent steps");
  }
  const int n = in.n;
  FocFunction g{in, K, in.phi_alpha, n + 1};

  const double lo = std::log(K) + 1e-8;
  const double hi = in.thresholds[n - 1];
  if (!(lo < hi)) {
    throw NoBracket("advance_stage: previous threshold sits at log K");
  }

  const int panels = 256;
  std::vector<double> xs(panels + 1), gs(panels + 1);
  for (int k = 0; k <= panels; ++k) {
    xs[k] = lo + (hi - lo) * static_cast<double>(k) / panels;
    gs[k] = g(xs[k]);
  }

  std::vector<double> candidates;
  int sign_changes = 0;
  for (int k = 0; k < panels; ++k) {
    if (gs[k] == 0.0) {
      candidates.push_back(xs[k]);
      ++sign_changes;
    } else if (gs[k] * gs[k + 1] < 0.0) {
      candidates.push_back(refine_root(g, xs[k], xs[k + 1], gs[k], gs[k + 1]));
      ++sign_changes;
    }
  }
  if (gs[panels] == 0.0) {
    candidates.push_back(xs[panels]);
    ++sign_changes;
  }

  double root;
  if (candidates.empty()) {
    // The thresholds flatten as stages accumulate; accept the boundary
    // when the condition is already satisfied there to working accuracy.
    if (std::abs(gs[panels]) <= 1e-9 * (1.0 + K)) {
      root = hi;
    } else {
      std::ostringstream os;
      os << "advance_stage: first-order condition has no sign change on ("
         << lo << ", " << hi << "); g at the ends: " << gs[0] << ", "
         << gs[panels];
      throw NoBracket(os.str());
    }
  } else if (candidates.size() == 1) {
    root = candidates.front();
  } else {
    // Multiple crossings: keep the one that actually maximizes the
    // discounted payoff, and surface the count in diagnostics.
    root = candidates.front();
    double best = std::exp(-in.phi_alpha * root) * g.payoff_tilde(root);
    for (double c : candidates) {
      double val = std::exp(-in.phi_alpha * c) * g.payoff_tilde(c);
      if (val > best) {
        best = val;
        root = c;
      }
    }
  }

  if (root > hi + 1e-12) {
    throw MonotonicityViolation(
        "advance_stage: new threshold exceeds the previous one");
  }
  root = std::min(root, hi);

  CoefficientSet out = in;
  out.n = n + 1;
  out.m = 0;
  out.thresholds.push_back(root);
  for (auto &reg : out.regions) {
    reg.A -= K;
    reg.B += 1.0;
  }
  RegionCoefficients fresh =
      RegionCoefficients::zero(in.spec.count(), in.degree);
  fresh.E = g.payoff_tilde(root) * std::exp(-in.phi_alpha * root);
  out.regions.push_back(std::move(fresh));
  out.check_structure();

  const double disc = max_boundary_discontinuity(out, tol);
  if (diag) {
    diag->stage = out.n;
    diag->threshold = root;
    diag->gradient_residual = std::abs(g(root));
    diag->sign_changes = sign_changes;
    diag->continuity_residual = disc;
  }
  if (disc > tol.continuity_tol) {
    std::ostringstream os;
    os << "value function discontinuous across a threshold (scaled jump "
       << disc << ") after advancing to stage " << out.n;
    throw PrecisionBreakdown(os.str(), out.n, 0);
  }
  return {root, out};
}

SolveResult solve(const LevyModel &model, double alpha_rate, double K,
                  double delta, int N, int M, const Tolerances &tol,
                  std::vector<CoefficientSet> *stage_values) {
  model.validate();
  if (N < 1) throw ConfigError("solve: N must be >= 1");
  if (M < 1) throw ConfigError("solve: M must be >= 1");
  if (!(K > 0.0)) throw ConfigError("solve: K must be > 0");
  validate_assumptions(model, alpha_rate, M, delta);

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const double p = alpha_rate + static_cast<double>(M) / delta;
  SpectralData sd = spectral_roots(model, p, tol);
  if (sd.phi_p <= 1.0) {
    throw AssumptionViolated(
        "solve: phi(p) <= 1, the unbounded-region integral diverges");
  }
  const double phi_alpha = phi(model, alpha_rate);
  if (phi_alpha <= 1.0) {
    throw AssumptionViolated("solve: phi(alpha) <= 1, no finite threshold");
  }
  const auto t1 = clock::now();

  SolveResult res;
  res.diagnostics.max_root_residual = sd.max_root_residual;

  if (stage_values) {
    stage_values->clear();
    stage_values->reserve(static_cast<std::size_t>(N));
  }
  CoefficientSet gamma = base_case(sd, phi_alpha, K, M,
                                   static_cast<double>(M) / delta);
  if (stage_values) stage_values->push_back(gamma);
  for (int stage = 1; stage < N; ++stage) {
    for (int m = 1; m <= M; ++m) {
      StepDiagnostics step;
      gamma = resolvent_step(gamma, tol, &step);
      res.diagnostics.steps.push_back(step);
    }
    StageDiagnostics st;
    auto advanced = advance_stage(gamma, K, tol, &st);
    gamma = std::move(advanced.second);
    res.diagnostics.stages.push_back(st);
    if (stage_values) stage_values->push_back(gamma);
  }
  const auto t2 = clock::now();

  res.thresholds = gamma.thresholds;
  res.diagnostics.final_continuity_residual =
      max_boundary_discontinuity(gamma, tol);
  res.value = std::move(gamma);
  res.root_phase_seconds = std::chrono::duration<double>(t1 - t0).count();
  res.recursion_phase_seconds = std::chrono::duration<double>(t2 - t1).count();
  return res;
}

}  // namespace refract

#pragma once

// Expansion coefficients Lambda0, Lambda1, Lambda2 of the rescaled lmgf
//   Lambda_eps(u) = eps log E[exp(u Y_eps / eps)] = L0 + eps L1 + eps^2 L2 + ...
// per model and regime, with the limiting domain D0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fwdsmile/errors.hpp"
#include "fwdsmile/jet.hpp"
#include "fwdsmile/models.hpp"

namespace fwdsmile {

enum class Regime { small_maturity, large_maturity };
enum class BoundKind { open, closed, infinite };

struct Domain {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  BoundKind lo_kind = BoundKind::infinite;
  BoundKind hi_kind = BoundKind::infinite;

  bool interior(double u) const { return u > lo && u < hi; }
};

struct RegimeCoefficients {
  Regime regime = Regime::small_maturity;
  ForwardHorizon horizon;  // small maturity: (t, tau); large maturity: t only
  double c = 0.0;          // 0 small maturity, 1 large maturity
  std::string label;

  std::function<double(double)> lambda0;
  std::function<double(double)> lambda1;
  std::function<double(double)> lambda2;
  bool lambda2_exact = true;

  // Taylor jets (value and derivatives to order 4); may be empty.
  std::function<Jet4(double)> lambda0_jet;
  std::function<Jet4(double)> lambda1_jet;

  // Lambda0 at complex argument; may be empty.
  std::function<std::complex<double>(std::complex<double>)> lambda0_complex;

  // Exact rescaled lmgf (u, eps) -> Lambda_eps(u); may be empty.
  std::function<double(double, double)> rescaled;

  Domain domain;
  double singular_lo = 0.0;  // Lambda0'(0)
  double singular_c = 0.0;   // Lambda0'(c)

  // Set for Heston so the smile layer can use the model's ATM formulas.
  std::optional<HestonModel> heston;
};

namespace detail {

template <class R>
struct scalar_of {
  using type = R;
};
template <class S, int N>
struct scalar_of<Jet<S, N>> {
  using type = S;
};
template <class R>
using scalar_t = typename scalar_of<R>::type;

template <class R>
struct complex_of {
  using type = std::complex<R>;
};
template <class S, int N>
struct complex_of<Jet<S, N>> {
  using type = Jet<std::complex<S>, N>;
};
template <class R>
using complex_t = typename complex_of<R>::type;

template <class T>
std::complex<T> to_cx(T x) {
  return {x, T(0)};
}
template <class S, int N>
Jet<std::complex<S>, N> to_cx(const Jet<S, N>& x) {
  return complexify(x);
}
template <class T>
T re(const std::complex<T>& x) {
  return x.real();
}
template <class S, int N>
Jet<S, N> re(const Jet<std::complex<S>, N>& x) {
  return real(x);
}
template <class T>
T lead(T x) {
  return x;
}
template <class S, int N>
S lead(const Jet<S, N>& x) {
  return x.value();
}

// Bisection for the boundary of a monotone predicate: ok(a) true, ok(b)
// false; returns the last ok point once |b - a| < tol.
template <class F>
double bisect_boundary(double a, double b, F ok, double tol = 1e-12) {
  while (std::abs(b - a) > tol * std::max(1.0, std::abs(a))) {
    const double m = 0.5 * (a + b);
    if (ok(m))
      a = m;
    else
      b = m;
  }
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Black-Scholes

inline RegimeCoefficients bs_coeffs(double sigma, Regime regime, double tau = 1.0) {
  if (!(sigma > 0)) fail(ErrorKind::invalid_parameter, "bs: sigma must be > 0");
  RegimeCoefficients rc;
  rc.regime = regime;
  const double s2 = sigma * sigma;
  if (regime == Regime::small_maturity) {
    if (!(tau > 0)) fail(ErrorKind::invalid_parameter, "bs: tau must be > 0");
    rc.horizon = {0.0, tau};
    rc.c = 0.0;
    rc.label = "bs/small";
    const double a = s2 * tau;
    rc.lambda0 = [a](double u) { return 0.5 * a * u * u; };
    rc.lambda1 = [a](double u) { return -0.5 * a * u; };
    rc.lambda0_jet = [a](double u) {
      Jet4 j(0.5 * a * u * u);
      j.c[1] = a * u;
      j.c[2] = 0.5 * a;
      return j;
    };
    rc.lambda1_jet = [a](double u) {
      Jet4 j(-0.5 * a * u);
      j.c[1] = -0.5 * a;
      return j;
    };
    rc.lambda0_complex = [a](std::complex<double> z) { return 0.5 * a * z * z; };
    rc.rescaled = [a](double u, double eps) { return 0.5 * a * u * u - 0.5 * a * u * eps; };
    rc.singular_lo = 0.0;
    rc.singular_c = 0.0;
  } else {
    rc.horizon = {0.0, 1.0};
    rc.c = 1.0;
    rc.label = "bs/large";
    rc.lambda0 = [s2](double u) { return 0.5 * s2 * u * (u - 1.0); };
    rc.lambda1 = [](double) { return 0.0; };
    rc.lambda0_jet = [s2](double u) {
      Jet4 j(0.5 * s2 * u * (u - 1.0));
      j.c[1] = s2 * (u - 0.5);
      j.c[2] = 0.5 * s2;
      return j;
    };
    rc.lambda1_jet = [](double) { return Jet4(0.0); };
    rc.lambda0_complex = [s2](std::complex<double> z) { return 0.5 * s2 * z * (z - 1.0); };
    rc.rescaled = [s2](double u, double) { return 0.5 * s2 * u * (u - 1.0); };
    rc.singular_lo = -0.5 * s2;
    rc.singular_c = 0.5 * s2;
  }
  rc.lambda2 = [](double) { return 0.0; };
  return rc;
}

// ---------------------------------------------------------------------------
// Heston, diagonal small maturity

// Xi(u, t, tau) = u v / (xi (rho_bar cot(xi rho_bar tau u / 2) - rho) - xi^2 t u / 2),
// written with sin/cos so that u = 0 is regular.
template <class R>
R heston_xi(const R& u, double t, double tau, const HestonParams& p) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  using T = detail::scalar_t<R>;
  const T rb = sqrt(T(1) - T(p.rho) * T(p.rho));
  const T a = T(p.xi) * rb * T(tau) / T(2);
  const R s = sin(a * u), c = cos(a * u);
  const R den = T(p.xi) * rb * c - (T(p.xi) * T(p.rho) + T(p.xi * p.xi * t / 2) * u) * s;
  return T(p.v) * u * s / den;
}

// Xi(u, t, tau) / Xi(u, 0, tau)
template <class R>
R heston_xi_ratio(const R& u, double t, double tau, const HestonParams& p) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  using T = detail::scalar_t<R>;
  const T rb = sqrt(T(1) - T(p.rho) * T(p.rho));
  const T a = T(p.xi) * rb * T(tau) / T(2);
  const R s = sin(a * u), c = cos(a * u);
  const R d0 = T(p.xi) * rb * c - T(p.xi) * T(p.rho) * s;
  return d0 / (d0 - T(p.xi * p.xi * t / 2) * u * s);
}

// First-order coefficient L(u, t, tau), built from the sign-dependent
// constants d0, d1, g0, g1 (sgn(u) = 1 for u >= 0).
template <class R>
R heston_L(const R& u, double t, double tau, const HestonParams& p, Measure m = Measure::typeI) {
  using std::exp;
  using std::log;
  using T = detail::scalar_t<R>;
  using CS = std::complex<T>;
  using CX = detail::complex_t<R>;
  const T sg = detail::lead(u) >= T(0) ? T(1) : T(-1);
  const T xi = p.xi, rho = p.rho, kappa = p.kappa, theta = p.theta, v = p.v, tt = T(tau),
          t_ = T(t);
  const T rb = std::sqrt(T(1) - rho * rho);
  const T keff = heston_effective_kappa(p, m);
  const CS I(0, 1);
  const CS d0(xi * rb * sg);
  const CS d1(0, (T(2) * kappa * rho - xi) * sg / (T(2) * rb));
  const CS g0 = CS(-rb * sg, rho) / CS(rb * sg, rho);
  const CS rr(rb, rho * sg);
  const CS g1 = CS((T(2) * kappa - xi * rho) * sg) / (CS(xi * rb) * rr * rr);
  const CS one(1);
  const CS a0 = I * CS(xi * rho) - d0;  // (i xi rho - d0)

  const CX U = detail::to_cx(u);
  const CX E = exp(-(I * d0 * CS(tt)) * U);
  const CX den = one - g0 * E;
  const CX L0 = CS(kappa * theta / (xi * xi)) *
                ((a0 * I * CS(tt)) * U - CS(2) * log(den / (one - g0)));
  const CX Einv = one / E;
  const CX br = (a0 * I * d1 * CS(tt)) * U + (d1 - CS(kappa)) * (one - Einv) +
                a0 * (one - E) * (g1 - (I * d1 * g0 * CS(tt)) * U) / den;
  const CX L1 = E / (CS(xi * xi) * den) * br;

  const R Xt = heston_xi(u, t, tau, p);
  const R X0 = heston_xi(u, 0.0, tau, p);
  const R r = heston_xi_ratio(u, t, tau, p);
  R L = detail::re(L0) + v * r * r * detail::re(L1) -
        Xt * Xt * (keff * xi * xi * t_ * t_ / (T(4) * v)) - Xt * (keff * t_);
  if (t > 0.0)
    L -= T(2) * kappa * theta / (xi * xi) * log(T(1) - X0 * (xi * xi * t_ / (T(2) * v)));
  return L;
}

// Complex pieces L0, L1 at real u (principal branches). Used to check that
// L is real: Im L1 = 0 and Im L0 = 0 modulo the log branch.
struct HestonLParts {
  std::complex<double> L0, L1;
  double imag_residue = 0.0;
};

inline HestonLParts heston_L_parts(double u, double tau, const HestonParams& p) {
  using CS = std::complex<double>;
  const double sg = u >= 0 ? 1.0 : -1.0;
  const double rb = p.rho_bar(), xi = p.xi, rho = p.rho, kappa = p.kappa;
  const CS I(0, 1);
  const CS d0(xi * rb * sg);
  const CS d1(0, (2 * kappa * rho - xi) * sg / (2 * rb));
  const CS g0 = CS(-rb * sg, rho) / CS(rb * sg, rho);
  const CS rr(rb, rho * sg);
  const CS g1 = CS((2 * kappa - xi * rho) * sg) / (CS(xi * rb) * rr * rr);
  const CS a0 = I * xi * rho - d0;
  const CS E = std::exp(-I * d0 * tau * u);
  const CS den = 1.0 - g0 * E;
  const CS q = den / (1.0 - g0);
  HestonLParts out;
  out.L0 = kappa * p.theta / (xi * xi) * (a0 * I * tau * u - 2.0 * std::log(q));
  const CS br = a0 * I * d1 * tau * u + (d1 - kappa) * (1.0 - 1.0 / E) +
                a0 * (1.0 - E) * (g1 - I * d1 * g0 * tau * u) / den;
  out.L1 = E / (xi * xi * den) * br;
  // Im[(i xi rho - d0) i tau u] / 2 - arg(q) must vanish modulo pi
  double ph = (a0 * I * tau * u).imag() / 2.0 - std::arg(q);
  ph = std::remainder(ph, std::numbers::pi);
  out.imag_residue = std::max(std::abs(out.L1.imag()), std::abs(ph));
  return out;
}

// Endpoints u-, u+ of the finiteness interval of Xi(., 0, tau).
inline std::pair<double, double> heston_diag_arctan_bounds(double tau, const HestonParams& p) {
  const double rb = p.rho_bar();
  const double w = 2.0 / (rb * p.xi * tau);
  const double up = w * std::atan2(rb, p.rho);
  return {up - w * std::numbers::pi, up};
}

// Lambda_eps(u) = eps log E[exp(u X_{eps tau}^{(eps t)} / eps)]
template <class T = double>
T heston_diag_rescaled(T u, T eps, double t, double tau, const HestonParams& p,
                       Measure m = Measure::typeI) {
  const ForwardHorizon h{static_cast<double>(eps * T(t)), static_cast<double>(eps * T(tau))};
  return eps * heston_forward_lmgf<T>(std::complex<T>(u / eps, T(0)), h, p, m).real();
}

// Richardson extrapolation of (Lambda_eps - Xi - eps L) / eps^2 over
// eps = 2^-6 .. 2^-12, in long double.
inline double heston_diag_lambda2(double u, double t, double tau, const HestonParams& p,
                                  Measure m = Measure::typeI) {
  using LD = long double;
  const LD ul = u;
  const LD X = heston_xi<LD>(ul, t, tau, p);
  const LD L = heston_L<LD>(ul, t, tau, p, m);
  std::vector<LD> R;
  for (int k = 6; k <= 12; ++k) {
    const LD eps = std::ldexp(1.0L, -k);
    try {
      const LD le = heston_diag_rescaled<LD>(ul, eps, t, tau, p, m);
      R.push_back((le - X - eps * L) / (eps * eps));
    } catch (const ExplosionError&) {
      R.clear();  // keep only a contiguous run of finite values
    }
  }
  if (R.size() < 3)
    fail(ErrorKind::domain, "heston diagonal Lambda2: rescaled lmgf infinite near u");
  // Neville table in eps with ratio 2
  const size_t n = R.size();
  std::vector<LD> row = R;
  for (size_t j = 1; j < n; ++j) {
    const LD f = std::ldexp(1.0L, static_cast<int>(j)) - 1.0L;
    for (size_t i = n - 1; i >= j; --i) row[i] = row[i] + (row[i] - row[i - 1]) / f;
  }
  return static_cast<double>(row[n - 1]);
}

inline RegimeCoefficients heston_diag_coeffs(const ForwardHorizon& h, const HestonParams& p,
                                             Measure m = Measure::typeI) {
  p.validate();
  h.validate();
  RegimeCoefficients rc;
  rc.regime = Regime::small_maturity;
  rc.horizon = h;
  rc.c = 0.0;
  rc.label = m == Measure::typeI ? "heston/diag" : "heston/diag/typeII";
  rc.heston = HestonModel{p, m};
  const double t = h.t, tau = h.tau;
  rc.lambda0 = [=](double u) { return heston_xi(u, t, tau, p); };
  rc.lambda1 = [=](double u) { return heston_L(u, t, tau, p, m); };
  rc.lambda0_jet = [=](double u) { return heston_xi(Jet4::variable(u), t, tau, p); };
  rc.lambda1_jet = [=](double u) { return heston_L(Jet4::variable(u), t, tau, p, m); };
  rc.lambda0_complex = [=](std::complex<double> z) {
    const double rb = p.rho_bar();
    const double a = p.xi * rb * tau / 2.0;
    const auto s = std::sin(a * z), c = std::cos(a * z);
    return p.v * z * s / (p.xi * rb * c - (p.xi * p.rho + p.xi * p.xi * t / 2.0 * z) * s);
  };
  rc.lambda2 = [=](double u) { return heston_diag_lambda2(u, t, tau, p, m); };
  rc.lambda2_exact = false;
  rc.rescaled = [=](double u, double eps) { return heston_diag_rescaled<double>(u, eps, t, tau, p, m); };

  auto [um, up] = heston_diag_arctan_bounds(tau, p);
  rc.domain = {um, up, BoundKind::open, BoundKind::open};
  if (t > 0.0) {
    const double thr = 2.0 * p.v / (p.xi * p.xi * t);
    auto ok = [&](double u) {
      if (!(u > um && u < up)) return false;
      const double x0 = heston_xi(u, 0.0, tau, p);
      return x0 >= 0.0 && x0 < thr;
    };
    rc.domain.hi = detail::bisect_boundary(0.0, up, ok);
    rc.domain.lo = detail::bisect_boundary(0.0, um, ok);
  }
  rc.singular_lo = 0.0;
  rc.singular_c = 0.0;
  return rc;
}

// ---------------------------------------------------------------------------
// Heston, large maturity

enum class HestonLMCase { I, II, III };

inline const char* to_string(HestonLMCase c) {
  switch (c) {
    case HestonLMCase::I: return "I";
    case HestonLMCase::II: return "II";
    default: return "III";
  }
}

struct HestonLMDomainReport {
  double rho_minus = -1.0;
  double rho_plus = 1.0;
  double eta = 0.0;
  double u_minus = 0.0;
  double u_plus = 0.0;
  std::optional<double> u_star_minus;
  std::optional<double> u_star_plus;
  HestonLMCase lm_case = HestonLMCase::III;
  Domain interval;
};

inline HestonLMDomainReport heston_lm_domain(double t, const HestonParams& p) {
  p.validate_large_maturity();
  if (!(t >= 0)) fail(ErrorKind::invalid_parameter, "heston large maturity: t must be >= 0");
  const double k = p.kappa, xi = p.xi, rho = p.rho;
  HestonLMDomainReport r;
  r.eta = std::sqrt(xi * xi * (1 - rho * rho) + (2 * k - rho * xi) * (2 * k - rho * xi));
  r.u_minus = (xi - 2 * k * rho - r.eta) / (2 * xi * (1 - rho * rho));
  r.u_plus = (xi - 2 * k * rho + r.eta) / (2 * xi * (1 - rho * rho));
  if (t > 0) {
    const double e = std::exp(k * t);
    const double e2 = std::exp(2 * k * t);
    const double sq = std::sqrt(16 * k * k * e2 + xi * xi * (1 - e) * (1 - e));
    r.rho_minus = (xi * (e2 - 1) - (e + 1) * sq) / (8 * k * e2);
    r.rho_plus = (xi * (e2 - 1) + (e + 1) * sq) / (8 * k * e2);
    const double psi = xi * (e - 1) - 4 * k * rho * e;
    const double nu2 = psi * psi - 16 * k * k * e;
    if (nu2 >= 0) {
      const double nu = std::sqrt(nu2);
      r.u_star_minus = (psi - nu) / (2 * xi * (e - 1));
      r.u_star_plus = (psi + nu) / (2 * xi * (e - 1));
    }
  }
  if (t > 0 && rho < r.rho_minus) {
    r.lm_case = HestonLMCase::I;
    r.interval = {r.u_minus, r.u_star_plus.value_or(r.u_plus), BoundKind::closed, BoundKind::open};
  } else if (t > 0 && rho > r.rho_plus && rho < std::min(1.0, k / xi) && k > r.rho_plus * xi) {
    r.lm_case = HestonLMCase::II;
    r.interval = {r.u_star_minus.value_or(r.u_minus), r.u_plus, BoundKind::open, BoundKind::closed};
  } else {
    r.lm_case = HestonLMCase::III;
    r.interval = {r.u_minus, r.u_plus, BoundKind::closed, BoundKind::closed};
  }
  return r;
}

template <class R>
R heston_lm_V(const R& u, const HestonParams& p) {
  using std::sqrt;
  using T = detail::scalar_t<R>;
  const T k = p.kappa, th = p.theta, xi = p.xi, rho = p.rho;
  const R b = k - rho * xi * u;
  const R d = sqrt(b * b + xi * xi * u * (T(1) - u));
  return (k * th / (xi * xi)) * (b - d);
}

template <class R>
R heston_lm_H(const R& u, double t, const HestonParams& p) {
  using std::exp;
  using std::log;
  using std::sqrt;
  using T = detail::scalar_t<R>;
  const T k = p.kappa, th = p.theta, xi = p.xi, rho = p.rho, v = p.v;
  const R b = k - rho * xi * u;
  const R d = sqrt(b * b + xi * xi * u * (T(1) - u));
  const R V = (k * th / (xi * xi)) * (b - d);
  const R g = (b - d) / (b + d);
  const T beta = detail::cir_beta<T>(k, xi, T(t));
  const R den = k * th - T(2) * beta * V;
  return V * (v * std::exp(-k * T(t))) / den -
         (T(2) * k * th / (xi * xi)) * log(den / (k * th * (T(1) - g)));
}

inline RegimeCoefficients heston_lm_coeffs(double t, const HestonParams& p,
                                           Measure m = Measure::typeI) {
  if (m == Measure::typeII)
    fail(ErrorKind::unsupported, "heston large maturity: Type-II measure not supported");
  const auto rep = heston_lm_domain(t, p);
  if (rep.lm_case != HestonLMCase::III) {
    std::ostringstream os;
    os << "heston large maturity: Case " << to_string(rep.lm_case) << " (rho = " << p.rho
       << " outside [rho-, min(rho+, kappa/xi)] = [" << rep.rho_minus << ", "
       << std::min(rep.rho_plus, p.kappa / p.xi)
       << "]); the limiting lmgf is not essentially smooth there and this expansion does not apply";
    fail(ErrorKind::unsupported, os.str());
  }
  RegimeCoefficients rc;
  rc.regime = Regime::large_maturity;
  rc.horizon = {t, 1.0};
  rc.c = 1.0;
  rc.label = "heston/large";
  rc.heston = HestonModel{p, m};
  rc.lambda0 = [=](double u) { return heston_lm_V(u, p); };
  rc.lambda1 = [=](double u) { return heston_lm_H(u, t, p); };
  rc.lambda2 = [](double) { return 0.0; };
  rc.lambda0_jet = [=](double u) { return heston_lm_V(Jet4::variable(u), p); };
  rc.lambda1_jet = [=](double u) { return heston_lm_H(Jet4::variable(u), t, p); };
  rc.lambda0_complex = [=](std::complex<double> z) { return heston_lm_V(z, p); };
  rc.rescaled = [=](double u, double eps) {
    return eps * heston_forward_lmgf<double>({u, 0.0}, {t, 1.0 / eps}, p).real();
  };
  rc.domain = rep.interval;
  rc.singular_lo = rc.lambda0_jet(0.0).deriv(1);
  rc.singular_c = rc.lambda0_jet(1.0).deriv(1);
  return rc;
}

// ---------------------------------------------------------------------------
// Time-changed Levy, large maturity

template <class R>
R levy_phi(const R& u, const LevySpec& spec) {
  using std::log;
  using T = detail::scalar_t<R>;
  if (const auto* vg = std::get_if<VarianceGammaParams>(&spec)) {
    const T C = vg->C, G = vg->G, M = vg->M;
    return T(vg->mu()) * u + C * (log(G * M) - log(M - u) - log(G + u));
  }
  const T s = std::get<BrownianDrift>(spec).sigma;
  return (s * s / T(2)) * u * (u - T(1));
}

inline RegimeCoefficients tclevy_lm_coeffs(double t, const LevySpec& levy, const Clock& clock) {
  std::visit([](const auto& l) { l.validate(); }, levy);
  if (std::abs(levy_exponent_real(1.0, levy)) > 1e-12)
    fail(ErrorKind::martingale, "levy exponent: phi(1) != 0");
  const auto [elo, ehi] = levy_domain(levy);
  if (!(elo < 0.0 && ehi > 1.0))
    fail(ErrorKind::invalid_parameter, "levy exponent: {0, 1} not inside the domain");

  RegimeCoefficients rc;
  rc.regime = Regime::large_maturity;
  rc.horizon = {t, 1.0};
  rc.c = 1.0;
  rc.lambda2 = [](double) { return 0.0; };
  auto phi = [levy](double u) { return levy_exponent_real(u, levy); };

  // Endpoints of {u : phi(u) < thr}; phi is convex with phi(0) = phi(1) = 0.
  auto threshold_domain = [&](double thr, BoundKind kind) {
    Domain d;
    auto ok = [&](double u) { return levy_real_finite(u, levy) && phi(u) < thr; };
    auto side = [&](double base, double dir, double edge, BoundKind& k_out) {
      double s = 1.0, prev = base;
      while (true) {
        const double x = base + dir * s;
        if (std::isfinite(edge) && dir * (x - edge) >= 0) {
          const double e = detail::bisect_boundary(prev, edge, ok);
          k_out = (std::abs(e - edge) < 1e-9) ? BoundKind::open : kind;
          return e;
        }
        if (!ok(x)) {
          k_out = kind;
          return detail::bisect_boundary(prev, x, ok);
        }
        prev = x;
        s *= 2.0;
        if (s > 1e8) {
          k_out = BoundKind::infinite;
          return dir * std::numeric_limits<double>::infinity();
        }
      }
    };
    d.lo = side(0.0, -1.0, elo, d.lo_kind);
    d.hi = side(1.0, 1.0, ehi, d.hi_kind);
    return d;
  };

  if (std::holds_alternative<TrivialClock>(clock)) {
    rc.label = "levy/large";
    rc.lambda0 = phi;
    rc.lambda1 = [](double) { return 0.0; };
    rc.lambda0_jet = [levy](double u) { return levy_phi(Jet4::variable(u), levy); };
    rc.lambda1_jet = [](double) { return Jet4(0.0); };
    rc.lambda0_complex = [levy](std::complex<double> z) { return levy_exponent(z, levy); };
    rc.rescaled = [levy](double u, double) { return levy_exponent_real(u, levy); };
    rc.domain = {elo, ehi, std::isfinite(elo) ? BoundKind::open : BoundKind::infinite,
                 std::isfinite(ehi) ? BoundKind::open : BoundKind::infinite};
  } else if (const auto* fc = std::get_if<FellerClockParams>(&clock)) {
    fc->validate();
    const FellerClockParams c = *fc;
    rc.label = "levy+feller/large";
    auto Vh = [c, levy](const auto& u) {
      using std::sqrt;
      const auto w = levy_phi(u, levy);
      return (c.kappa * c.theta / (c.xi * c.xi)) * (c.kappa - sqrt(c.kappa * c.kappa - 2.0 * c.xi * c.xi * w));
    };
    auto Hh = [c, levy, t](const auto& u) {
      using std::log;
      using std::sqrt;
      const auto w = levy_phi(u, levy);
      const auto d = sqrt(c.kappa * c.kappa - 2.0 * c.xi * c.xi * w);
      const auto V = (c.kappa * c.theta / (c.xi * c.xi)) * (c.kappa - d);
      const auto g = (c.kappa - d) / (c.kappa + d);
      const double beta = detail::cir_beta(c.kappa, c.xi, t);
      const double kt = c.kappa * c.theta;
      const auto den = kt - 2.0 * beta * V;
      return V * (c.v * std::exp(-c.kappa * t)) / den -
             (2.0 * kt / (c.xi * c.xi)) * log(den / (kt * (1.0 - g)));
    };
    rc.lambda0 = [Vh](double u) { return Vh(u); };
    rc.lambda1 = [Hh](double u) { return Hh(u); };
    rc.lambda0_jet = [Vh](double u) { return Vh(Jet4::variable(u)); };
    rc.lambda1_jet = [Hh](double u) { return Hh(Jet4::variable(u)); };
    rc.lambda0_complex = [c, levy](std::complex<double> z) {
      const auto w = levy_exponent(z, levy);
      return (c.kappa * c.theta / (c.xi * c.xi)) *
             (c.kappa - std::sqrt(c.kappa * c.kappa - 2.0 * c.xi * c.xi * w));
    };
    rc.rescaled = [c, levy, t](double u, double eps) {
      return eps * feller_tc_forward_lmgf<double>({u, 0.0}, {t, 1.0 / eps}, levy, c).real();
    };
    // closed at the capacity threshold, open where phi itself blows up
    rc.domain = threshold_domain(c.kappa * c.kappa / (2.0 * c.xi * c.xi), BoundKind::closed);
  } else {
    const auto& gc = std::get<GammaOUClockParams>(clock);
    gc.validate();
    const GammaOUClockParams c = gc;
    rc.label = "levy+gammaou/large";
    const double al = c.alpha * c.lambda;
    auto Vt = [c, levy, al](const auto& u) {
      const auto w = levy_phi(u, levy);
      return (c.lambda * c.delta) * w / (al - w);
    };
    auto Ht = [c, levy, al, t](const auto& u) {
      using std::log;
      const auto w = levy_phi(u, levy);
      const double el = std::exp(-c.lambda * t);
      return (c.lambda * c.alpha * c.delta) / (al - w) * log(1.0 - w / al) +
             w * (c.v * el / c.lambda) + c.delta * log((al - w * el) / (al - w));
    };
    rc.lambda0 = [Vt](double u) { return Vt(u); };
    rc.lambda1 = [Ht](double u) { return Ht(u); };
    rc.lambda0_jet = [Vt](double u) { return Vt(Jet4::variable(u)); };
    rc.lambda1_jet = [Ht](double u) { return Ht(Jet4::variable(u)); };
    rc.lambda0_complex = [c, levy, al](std::complex<double> z) {
      const auto w = levy_exponent(z, levy);
      return (c.lambda * c.delta) * w / (al - w);
    };
    rc.rescaled = [c, levy, t](double u, double eps) {
      return eps * gammaou_tc_forward_lmgf<double>({u, 0.0}, {t, 1.0 / eps}, levy, c).real();
    };
    rc.domain = threshold_domain(al, BoundKind::open);
  }
  rc.singular_lo = rc.lambda0_jet(0.0).deriv(1);
  rc.singular_c = rc.lambda0_jet(1.0).deriv(1);
  return rc;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct ResidualTable {
  std::vector<double> eps;
  std::vector<double> residual;  // Lambda_eps - L0 - eps L1 - eps^2 L2
  double slope = 0.0;            // least-squares slope of log|r| vs log eps
};

inline ResidualTable expansion_residual(const RegimeCoefficients& rc, double u,
                                        const std::vector<double>& eps_grid) {
  if (!rc.rescaled) fail(ErrorKind::unsupported, "expansion_residual: no exact rescaled lmgf");
  if (!rc.domain.interior(u)) fail(ErrorKind::domain, "expansion_residual: u outside domain");
  ResidualTable tab;
  const double l0 = rc.lambda0(u), l1 = rc.lambda1(u), l2 = rc.lambda2(u);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double e : eps_grid) {
    const double r = rc.rescaled(u, e) - l0 - e * l1 - e * e * l2;
    tab.eps.push_back(e);
    tab.residual.push_back(r);
    if (r != 0.0) {
      const double x = std::log(e), y = std::log(std::abs(r));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  }
  tab.slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx)
                     : std::numeric_limits<double>::infinity();
  return tab;
}

struct TailProfile {
  std::vector<double> p_i;
  std::vector<double> value;  // Re Lambda0(p_r + i p_i)
  bool unique_max_at_zero = false;
};

inline TailProfile tail_profile(const RegimeCoefficients& rc, double p_r,
                                const std::vector<double>& grid) {
  if (!rc.lambda0_complex) fail(ErrorKind::unsupported, "tail_profile: no complex Lambda0");
  if (p_r == 0.0 || !rc.domain.interior(p_r))
    fail(ErrorKind::domain, "tail_profile: need p_r != 0 inside the domain");
  TailProfile tp;
  double peak = -std::numeric_limits<double>::infinity(), at_zero = peak;
  double best_other = peak;
  for (double pi : grid) {
    const double val = rc.lambda0_complex({p_r, pi}).real();
    tp.p_i.push_back(pi);
    tp.value.push_back(val);
    peak = std::max(peak, val);
    if (pi == 0.0)
      at_zero = val;
    else
      best_other = std::max(best_other, val);
  }
  if (tp.value.size() >= 2 && std::isfinite(at_zero)) {
    const double edge = std::max(tp.value.front(), tp.value.back());
    tp.unique_max_at_zero = at_zero > best_other && at_zero - edge > 0.0;
  }
  return tp;
}

}  // namespace fwdsmile

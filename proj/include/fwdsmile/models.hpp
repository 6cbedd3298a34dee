#pragma once

// Forward log-price moment generating functions
//   z -> log E[exp(z X_tau^{(t)})],  X_tau^{(t)} = X_{t+tau} - X_t,
// for Black-Scholes, Heston (Type I / Type II measure) and Levy processes
// time-changed by an integrated Feller or Gamma-OU clock.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "fwdsmile/errors.hpp"

namespace fwdsmile {

struct ForwardHorizon {
  double t = 0.0;
  double tau = 1.0;

  void validate() const {
    if (!(t >= 0.0) || !(tau > 0.0) || !std::isfinite(t) || !std::isfinite(tau))
      fail(ErrorKind::invalid_parameter, "horizon: need t >= 0 and tau > 0");
  }
};

enum class Measure { typeI, typeII };

struct HestonParams {
  double v = 0.0;
  double theta = 0.0;
  double kappa = 0.0;
  double xi = 0.0;
  double rho = 0.0;

  double rho_bar() const { return std::sqrt(1.0 - rho * rho); }

  void validate() const {
    if (!(v > 0) || !(theta > 0) || !(kappa > 0) || !(xi > 0))
      fail(ErrorKind::invalid_parameter,
           "heston: v, theta, kappa, xi must be strictly positive");
    if (!(std::abs(rho) < 1.0))
      fail(ErrorKind::invalid_parameter, "heston: need |rho| < 1");
  }

  // Standing assumption of the large-maturity regime.
  void validate_large_maturity() const {
    validate();
    if (!(kappa > rho * xi)) {
      std::ostringstream os;
      os << "heston large maturity: kappa (" << kappa << ") <= rho*xi ("
         << rho * xi << "); the limiting lmgf is not essentially smooth";
      fail(ErrorKind::unsupported, os.str());
    }
  }
};

struct VarianceGammaParams {
  double C = 0.0;
  double G = 0.0;
  double M = 0.0;

  // Drift making exp(N) a martingale, phi(1) = 0.
  double mu() const { return -C * std::log(G * M / ((M - 1.0) * (G + 1.0))); }

  void validate() const {
    if (!(C > 0) || !(G > 0) || !(M > 1))
      fail(ErrorKind::invalid_parameter, "vg: need C > 0, G > 0, M > 1");
  }
};

// phi(z) = Sigma^2 z (z-1) / 2
struct BrownianDrift {
  double sigma = 1.0;
  void validate() const {
    if (!(sigma > 0)) fail(ErrorKind::invalid_parameter, "brownian: sigma must be > 0");
  }
};

using LevySpec = std::variant<VarianceGammaParams, BrownianDrift>;

struct FellerClockParams {
  double v = 0.0;
  double theta = 0.0;
  double kappa = 0.0;
  double xi = 0.0;
  void validate() const {
    if (!(v > 0) || !(theta > 0) || !(kappa > 0) || !(xi > 0))
      fail(ErrorKind::invalid_parameter, "feller clock: all parameters must be > 0");
  }
};

struct GammaOUClockParams {
  double v = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double delta = 0.0;
  void validate() const {
    if (!(v > 0) || !(lambda > 0) || !(alpha > 0) || !(delta > 0))
      fail(ErrorKind::invalid_parameter, "gamma-ou clock: all parameters must be > 0");
  }
};

struct TrivialClock {};

using Clock = std::variant<TrivialClock, FellerClockParams, GammaOUClockParams>;

struct BlackScholesModel {
  double sigma = 0.2;
};

struct HestonModel {
  HestonParams p;
  Measure measure = Measure::typeI;
};

struct TimeChangedLevyModel {
  LevySpec levy;
  Clock clock;
};

using ModelSpec = std::variant<BlackScholesModel, HestonModel, TimeChangedLevyModel>;

namespace detail {

template <class T>
using cplx = std::complex<T>;

// Accurate exp(x) - 1 for complex x.
template <class T>
cplx<T> expm1(cplx<T> x) {
  using std::cos;
  using std::exp;
  using std::expm1;
  using std::sin;
  const T a = x.real(), b = x.imag();
  const T s = sin(b / 2);
  return {expm1(a) * cos(b) - 2 * s * s, exp(a) * sin(b)};
}

// (1 - exp(-x)) / x
template <class T>
cplx<T> one_minus_exp_over(cplx<T> x) {
  if (std::abs(x) < T(1e-8)) return T(1) - x / T(2) + x * x / T(6);
  return -expm1(-x) / x;
}

// Riccati kernel shared by the Heston variance and the Feller clock:
//   B' = xi^2 B^2 / 2 - b B + w,  B(0) = 0,
// and the log term of A. With d = sqrt(b^2 - 2 xi^2 w), Re d >= 0,
//   B = w tau E1 / Q,  A = (kappa theta / xi^2) ((b - d) tau - 2 log Q),
//   Q = (b tau E1 + 1 + e^{-d tau}) / 2,  E1 = (1 - e^{-d tau}) / (d tau).
// This is the rotation-free form (equivalent to log((1-g e)/(1-g)) with
// g = (b-d)/(b+d)), with the d -> 0 limit handled without 0/0.
template <class T>
struct CirTerms {
  cplx<T> A_core;  // (b - d) tau - 2 log Q
  cplx<T> B;
};

template <class T>
CirTerms<T> cir_terms(cplx<T> b, cplx<T> w, T xi, T tau) {
  const cplx<T> d = std::sqrt(b * b - T(2) * xi * xi * w);
  const cplx<T> x = d * tau;
  const cplx<T> E1 = one_minus_exp_over(x);
  const cplx<T> e = std::exp(-x);
  const cplx<T> Q = (b * tau * E1 + T(1) + e) / T(2);
  cplx<T> bmd;
  if (std::abs(b + d) > std::abs(b))
    bmd = T(2) * xi * xi * w / (b + d);
  else
    bmd = b - d;
  return {bmd * tau - T(2) * std::log(Q), w * tau * E1 / Q};
}

// Explosion time of B' = xi^2 B^2/2 - b B + w for real b, w.
inline double riccati_explosion_time(double b, double w, double xi) {
  const double inf = std::numeric_limits<double>::infinity();
  if (w <= 0.0) return inf;
  const double D2 = b * b - 2.0 * xi * xi * w;
  if (D2 > 0.0) {
    const double d = std::sqrt(D2);
    if (b >= 0.0) return inf;
    return std::log((-b + d) / (-b - d)) / d;
  }
  if (D2 == 0.0) return b < 0.0 ? 2.0 / (-b) : inf;
  const double delta = std::sqrt(-D2);
  return (2.0 / delta) * (std::numbers::pi / 2.0 + std::atan(b / delta));
}

// beta_t = xi^2 (1 - e^{-k t}) / (4 k), including the k -> 0 limit.
template <class T>
T cir_beta(T k, T xi, T t) {
  using std::abs;
  using std::expm1;
  if (abs(k * t) < T(1e-12)) return xi * xi * t / T(4);
  return -xi * xi * expm1(-k * t) / (T(4) * k);
}

// log E[exp(w V_t)] for V_t a CIR(k, theta_eff) started at v:
//   w v e^{-k t} / (1 - 2 beta w) - (2 kappa theta / xi^2) log(1 - 2 beta w).
// The principal log is correct since Re(1 - 2 beta w) > 0 in the strip.
template <class T>
cplx<T> cir_forward_term(cplx<T> w, T v, T k, T two_kt_over_xi2, T xi, T t) {
  using std::exp;
  const T beta = cir_beta(k, xi, t);
  const cplx<T> den = T(1) - T(2) * beta * w;
  return w * v * exp(-k * t) / den - two_kt_over_xi2 * std::log(den);
}

inline std::string fmt_z(std::complex<double> z) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i)";
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Heston

// kappa used inside beta_t and the decay factor.
inline double heston_effective_kappa(const HestonParams& p, Measure m) {
  return m == Measure::typeII ? p.kappa - p.xi * p.rho : p.kappa;
}

// Real-axis finiteness of E[exp(a X_tau^{(t)})].
inline bool heston_real_finite(double a, const ForwardHorizon& h, const HestonParams& p,
                               Measure m = Measure::typeI) {
  const double b = p.kappa - p.rho * p.xi * a;
  const double w = 0.5 * a * (a - 1.0);
  if (!(detail::riccati_explosion_time(b, w, p.xi) > h.tau)) return false;
  if (h.t == 0.0) return true;
  const auto ct = detail::cir_terms<double>(b, w, p.xi, h.tau);
  const double B = ct.B.real();
  if (!std::isfinite(B)) return false;
  const double beta = detail::cir_beta(heston_effective_kappa(p, m), p.xi, h.t);
  return 1.0 - 2.0 * beta * B > 0.0;
}

// log E[exp(z X_tau^{(t)})] under the Type-I measure, or under the
// stopped-share-price measure (Type II) where kappa -> kappa - xi rho in the
// forward factor only.
template <class T = double>
std::complex<T> heston_forward_lmgf(std::complex<T> z, const ForwardHorizon& h,
                                    const HestonParams& p, Measure m = Measure::typeI) {
  const std::complex<double> zd(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  if (!heston_real_finite(zd.real(), h, p, m))
    throw ExplosionError(zd, "heston forward lmgf infinite at z = " + detail::fmt_z(zd));
  const T kappa = p.kappa, theta = p.theta, xi = p.xi, rho = p.rho, v = p.v;
  const std::complex<T> b = kappa - rho * xi * z;
  const std::complex<T> w = z * (z - T(1)) / T(2);
  const auto ct = detail::cir_terms<T>(b, w, xi, T(h.tau));
  const T c = kappa * theta / (xi * xi);
  std::complex<T> val = c * ct.A_core;
  const T keff = static_cast<T>(heston_effective_kappa(p, m));
  if (h.t > 0.0)
    val += detail::cir_forward_term<T>(ct.B, v, keff, T(2) * c, xi, T(h.t));
  else
    val += ct.B * v;
  if (z.imag() == T(0)) val.imag(T(0));
  return val;
}

// ---------------------------------------------------------------------------
// Levy exponents

inline bool levy_real_finite(double a, const LevySpec& spec) {
  if (const auto* vg = std::get_if<VarianceGammaParams>(&spec)) return a > -vg->G && a < vg->M;
  return std::isfinite(a);
}

inline std::pair<double, double> levy_domain(const LevySpec& spec) {
  if (const auto* vg = std::get_if<VarianceGammaParams>(&spec)) return {-vg->G, vg->M};
  const double inf = std::numeric_limits<double>::infinity();
  return {-inf, inf};
}

template <class T = double>
std::complex<T> levy_exponent(std::complex<T> z, const LevySpec& spec) {
  if (const auto* vg = std::get_if<VarianceGammaParams>(&spec)) {
    if (!levy_real_finite(static_cast<double>(z.real()), spec)) {
      std::ostringstream os;
      os << "vg exponent: Re z = " << static_cast<double>(z.real()) << " outside (-G, M) = ("
         << -vg->G << ", " << vg->M << ")";
      fail(ErrorKind::domain, os.str());
    }
    const T C = vg->C, G = vg->G, M = vg->M;
    // each log argument has positive real part inside the strip
    std::complex<T> r = T(vg->mu()) * z +
                        C * (std::log(G) + std::log(M) - std::log(M - z) - std::log(G + z));
    if (z.imag() == T(0)) r.imag(T(0));
    return r;
  }
  const T s = std::get<BrownianDrift>(spec).sigma;
  return s * s * z * (z - T(1)) / T(2);
}

inline double levy_exponent_real(double u, const LevySpec& spec) {
  return levy_exponent<double>({u, 0.0}, spec).real();
}

// ---------------------------------------------------------------------------
// Time-changed Levy, Feller clock

inline bool feller_real_finite(double a, const ForwardHorizon& h, const LevySpec& levy,
                               const FellerClockParams& c) {
  if (!levy_real_finite(a, levy)) return false;
  const double w = levy_exponent_real(a, levy);
  if (!(detail::riccati_explosion_time(c.kappa, w, c.xi) > h.tau)) return false;
  if (h.t == 0.0) return true;
  const double B = detail::cir_terms<double>(c.kappa, w, c.xi, h.tau).B.real();
  if (!std::isfinite(B)) return false;
  return 1.0 - 2.0 * detail::cir_beta(c.kappa, c.xi, h.t) * B > 0.0;
}

template <class T = double>
std::complex<T> feller_tc_forward_lmgf(std::complex<T> z, const ForwardHorizon& h,
                                       const LevySpec& levy, const FellerClockParams& c) {
  const std::complex<double> zd(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  if (!feller_real_finite(zd.real(), h, levy, c))
    throw ExplosionError(zd, "feller-clock forward lmgf infinite at z = " + detail::fmt_z(zd));
  const std::complex<T> w = levy_exponent<T>(z, levy);
  const T kappa = c.kappa, theta = c.theta, xi = c.xi, v = c.v;
  const auto ct = detail::cir_terms<T>(std::complex<T>(kappa), w, xi, T(h.tau));
  const T k2 = kappa * theta / (xi * xi);
  std::complex<T> val = k2 * ct.A_core;
  if (h.t > 0.0)
    val += detail::cir_forward_term<T>(ct.B, v, kappa, T(2) * k2, xi, T(h.t));
  else
    val += ct.B * v;
  if (z.imag() == T(0)) val.imag(T(0));
  return val;
}

// ---------------------------------------------------------------------------
// Time-changed Levy, Gamma-OU clock

inline bool gammaou_real_finite(double a, const ForwardHorizon& h, const LevySpec& levy,
                                const GammaOUClockParams& c) {
  if (!levy_real_finite(a, levy)) return false;
  const double w = levy_exponent_real(a, levy);
  return w * (-std::expm1(-c.lambda * h.tau)) < c.alpha * c.lambda;
}

template <class T = double>
std::complex<T> gammaou_tc_forward_lmgf(std::complex<T> z, const ForwardHorizon& h,
                                        const LevySpec& levy, const GammaOUClockParams& c) {
  const std::complex<double> zd(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  if (!gammaou_real_finite(zd.real(), h, levy, c))
    throw ExplosionError(zd, "gamma-ou-clock forward lmgf infinite at z = " + detail::fmt_z(zd));
  using std::exp;
  using std::expm1;
  const std::complex<T> w = levy_exponent<T>(z, levy);
  const T lam = c.lambda, al = c.alpha, de = c.delta, v = c.v, tau = h.tau, t = h.t;
  const T om = -expm1(-lam * tau);  // 1 - e^{-lambda tau}
  const std::complex<T> B = w * om / lam;
  const std::complex<T> A =
      lam * de / (al * lam - w) * (w * tau + al * std::log(T(1) - w * om / (al * lam)));
  // log((B - a e^{lt}) / (e^{lt} (B - a))) = log(1 - (B/a) e^{-lt}) - log(1 - B/a)
  const std::complex<T> fwd = B * v * exp(-lam * t) +
                              de * (std::log(T(1) - (B / al) * exp(-lam * t)) -
                                    std::log(T(1) - B / al));
  std::complex<T> val = A + fwd;
  if (z.imag() == T(0)) val.imag(T(0));
  return val;
}

// ---------------------------------------------------------------------------
// Dispatch over ModelSpec

inline void validate_model(const ModelSpec& m) {
  std::visit(
      [](const auto& x) {
        using X = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<X, BlackScholesModel>) {
          if (!(x.sigma > 0)) fail(ErrorKind::invalid_parameter, "bs: sigma must be > 0");
        } else if constexpr (std::is_same_v<X, HestonModel>) {
          x.p.validate();
        } else {
          std::visit([](const auto& l) { l.validate(); }, x.levy);
          std::visit(
              [](const auto& c) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(c)>, TrivialClock>)
                  c.validate();
              },
              x.clock);
        }
      },
      m);
}

inline bool real_finite(const ModelSpec& m, double a, const ForwardHorizon& h) {
  if (!std::isfinite(a)) return false;
  if (std::holds_alternative<BlackScholesModel>(m)) return true;
  if (const auto* hm = std::get_if<HestonModel>(&m)) return heston_real_finite(a, h, hm->p, hm->measure);
  const auto& tc = std::get<TimeChangedLevyModel>(m);
  if (const auto* fc = std::get_if<FellerClockParams>(&tc.clock))
    return feller_real_finite(a, h, tc.levy, *fc);
  if (const auto* gc = std::get_if<GammaOUClockParams>(&tc.clock))
    return gammaou_real_finite(a, h, tc.levy, *gc);
  return levy_real_finite(a, tc.levy);
}

template <class T = double>
std::complex<T> forward_lmgf(const ModelSpec& m, std::complex<T> z, const ForwardHorizon& h) {
  if (const auto* bs = std::get_if<BlackScholesModel>(&m)) {
    const T s = bs->sigma;
    return T(h.tau) * s * s * z * (z - T(1)) / T(2);
  }
  if (const auto* hm = std::get_if<HestonModel>(&m))
    return heston_forward_lmgf<T>(z, h, hm->p, hm->measure);
  const auto& tc = std::get<TimeChangedLevyModel>(m);
  if (const auto* fc = std::get_if<FellerClockParams>(&tc.clock))
    return feller_tc_forward_lmgf<T>(z, h, tc.levy, *fc);
  if (const auto* gc = std::get_if<GammaOUClockParams>(&tc.clock))
    return gammaou_tc_forward_lmgf<T>(z, h, tc.levy, *gc);
  if (!levy_real_finite(static_cast<double>(z.real()), tc.levy))
    throw ExplosionError({double(z.real()), double(z.imag())}, "levy lmgf infinite");
  return T(h.tau) * levy_exponent<T>(z, tc.levy);
}

// Real interval on which the forward lmgf at horizon h is finite, found by
// outward doubling from {0, 1} and bisection to a 1e-12 bracket. Infinite
// ends are reported as +-inf once the search passes `cap`.
inline std::pair<double, double> moment_bounds(const ModelSpec& m, const ForwardHorizon& h,
                                               double cap = 1e4) {
  const double inf = std::numeric_limits<double>::infinity();
  auto search = [&](double base, double dir) {
    double s = 1.0;
    while (real_finite(m, base + dir * s, h)) {
      s *= 2.0;
      if (s > cap) return dir * inf;
    }
    double lo = s / 2.0, hi = s;
    if (s == 1.0) lo = 0.0;
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      if (real_finite(m, base + dir * mid, h))
        lo = mid;
      else
        hi = mid;
    }
    return base + dir * lo;
  };
  return {search(0.0, -1.0), search(1.0, 1.0)};
}

}  // namespace fwdsmile

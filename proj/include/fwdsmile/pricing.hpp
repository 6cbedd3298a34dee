#pragma once

// Sharp large-deviations expansion of option prices around the saddlepoint,
// plus the Black-Scholes closed forms it reduces to.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>

#include "fwdsmile/errors.hpp"
#include "fwdsmile/expansions.hpp"
#include "fwdsmile/saddle.hpp"

namespace fwdsmile {

enum class PayoffKind { call, put, covered };

inline const char* to_string(PayoffKind k) {
  switch (k) {
    case PayoffKind::call: return "call";
    case PayoffKind::put: return "put";
    default: return "covered";
  }
}

// f(eps) with eps f(eps) -> c
struct ScalingFunction {
  double c = 0.0;
  std::function<double(double)> f_of_eps;

  static ScalingFunction small_maturity() { return {0.0, [](double) { return 1.0; }}; }
  static ScalingFunction large_maturity() { return {1.0, [](double e) { return 1.0 / e; }}; }
  static ScalingFunction for_regime(Regime r) {
    return r == Regime::small_maturity ? small_maturity() : large_maturity();
  }
};

struct PriceQuote {
  double k = 0.0;
  double epsilon = 0.0;
  PayoffKind payoff_kind = PayoffKind::call;
  double leading = 0.0;     // exp(-L*/eps + k f + L1) * Abar  (signed)
  double correction = 1.0;  // A_c
  double price = 0.0;       // leading * correction, or the call value if requested
  std::array<double, 3> order_terms{};  // truncated expansion values, orders 0, 1, 2
  bool as_call = false;
};

inline double upsilon(double b, const SaddleData& s) {
  const double u = s.u_star;
  if (u == 0.0 || u == b) {
    std::ostringstream os;
    os << "upsilon: singular strike, u* = " << u << " equals 0 or b = " << b;
    fail(ErrorKind::singular_strike, os.str());
  }
  const double l02 = s.d0[2], l03 = s.d0[3], l04 = s.d0[4];
  const double l11 = s.d1[1], l12 = s.d1[2];
  if (!(l02 > 0)) fail(ErrorKind::domain, "upsilon: Lambda0'' must be positive at u*");
  const double w = u - b;
  return s.l2 - 5 * l03 * l03 / (24 * l02 * l02 * l02) +
         (4 * l11 * l03 + l04) / (8 * l02 * l02) - (l11 * l11 + l12) / (2 * l02) -
         l03 / (2 * u * l02 * l02) - l03 / (2 * w * l02 * l02) -
         (l11 * (b - 2 * u) + 3) / (u * w * l02) - b * b / (u * u * w * w * l02);
}

inline PayoffKind classify_payoff(const RegimeCoefficients& rc, double k) {
  if (k > rc.singular_c) return PayoffKind::call;
  if (k < rc.singular_lo) return PayoffKind::put;
  return PayoffKind::covered;
}

inline void require_regular_strike(const RegimeCoefficients& rc, double k, const char* who) {
  for (double p : {rc.singular_lo, rc.singular_c}) {
    if (std::abs(k - p) < kSingularGuard) {
      std::ostringstream os;
      os << who << ": k = " << k << " is within " << kSingularGuard << " of the singular strike "
         << p;
      fail(ErrorKind::singular_strike, os.str());
    }
  }
}

// order 0: leading prefactor; 1: with Lambda1 in the exponent; 2: times A_c.
// With as_call the put or covered value is converted to a call price.
inline PriceQuote fso_price_expansion(const RegimeCoefficients& rc, const SaddleData& s,
                                      const ScalingFunction& sc, double eps, int order = 2,
                                      bool as_call = false) {
  if (!(eps > 0)) fail(ErrorKind::invalid_parameter, "fso_price_expansion: epsilon must be > 0");
  if (order < 0 || order > 2) fail(ErrorKind::invalid_parameter, "fso_price_expansion: order in {0,1,2}");
  const double k = s.k, c = sc.c, u = s.u_star;
  require_regular_strike(rc, k, "fso_price_expansion");
  const double f = sc.f_of_eps(eps);
  const double l02 = s.d0[2];
  const double root = std::sqrt(2 * std::numbers::pi * l02);

  PriceQuote q;
  q.k = k;
  q.epsilon = eps;
  q.payoff_kind = classify_payoff(rc, k);
  q.as_call = as_call;

  const double abar = c > 0 ? c * std::sqrt(eps) / (u * (u - c) * root)
                            : std::pow(eps, 1.5) * f / (u * u * root);
  const double base = -s.lambda_star / eps + k * f;
  double ac = 1 + upsilon(c, s) * eps;
  if (c > 0)
    ac += u * (eps * f - c) / ((u - c) * c);
  else
    ac += eps * f / u;

  const double t0 = std::exp(base) * abar;
  const double t1 = std::exp(base + s.l1) * abar;
  q.order_terms = {t0, t1, t1 * ac};
  q.leading = order == 0 ? t0 : t1;
  q.correction = order == 2 ? ac : 1.0;

  double shift = 0.0;
  if (as_call) {
    if (k < rc.singular_c) {
      if (!rc.rescaled) fail(ErrorKind::unsupported, "fso_price_expansion: call conversion needs the rescaled lmgf");
      shift += std::exp(rc.rescaled(f * eps, eps) / eps);
    }
    if (k < rc.singular_lo) shift -= std::exp(k * f);
    for (auto& v : q.order_terms) v += shift;
  }
  q.price = q.leading * q.correction + shift;
  return q;
}

// Out-of-the-money price, small maturity, to first order in eps.
inline double bs_smallmat_price_closed(double k, double sigma, double tau, double eps) {
  if (k == 0.0) fail(ErrorKind::singular_strike, "bs_smallmat_price_closed: k must be nonzero");
  const double a = sigma * sigma * tau * eps;
  return std::exp(k / 2 - k * k / (2 * a)) * std::pow(a, 1.5) / (k * k * std::sqrt(2 * std::numbers::pi)) *
         (1 - (3 / (k * k) + 0.125) * a);
}

struct BsLargeQuote {
  PayoffKind payoff_kind;
  double value;  // signed, negative in the covered regime
};

inline BsLargeQuote bs_largemat_price_closed(double k, double sigma, double tau) {
  const double s2 = sigma * sigma, s4 = s2 * s2;
  if (std::abs(std::abs(k) - 0.5 * s2) <= 1e-12 * s2)
    fail(ErrorKind::singular_strike, "bs_largemat_price_closed: k = +-sigma^2/2");
  const double d = 4 * k * k - s4;
  const double rate = (k + 0.5 * s2) * (k + 0.5 * s2) / (2 * s2) - k;
  const double v = std::exp(-tau * rate) * 4 * s2 * sigma / (d * std::sqrt(2 * std::numbers::pi * tau)) *
                   (1 - 4 * s2 * (s4 + 12 * k * k) / (d * d * tau));
  const PayoffKind pk = k > 0.5 * s2 ? PayoffKind::call : (k < -0.5 * s2 ? PayoffKind::put : PayoffKind::covered);
  return {pk, v};
}

}  // namespace fwdsmile

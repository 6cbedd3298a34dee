#pragma once

// Reference prices by damped Fourier inversion of the forward lmgf, Black-Scholes
// prices and implied-volatility inversion.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>
#include <vector>

#include "fwdsmile/errors.hpp"
#include "fwdsmile/models.hpp"

namespace fwdsmile {

struct QuadratureConfig {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  int max_depth = 40;
  double initial_limit = 200.0;   // first truncation point, doubled as needed
  double max_limit = 200.0 * 65536;

  void validate() const {
    if (!(abs_tol > 0 && rel_tol > 0))
      fail(ErrorKind::invalid_parameter, "quadrature: tolerances must be positive");
    if (max_depth < 10) fail(ErrorKind::invalid_parameter, "quadrature: max_depth must be >= 10");
  }
};

namespace detail {

// 15-point Kronrod / 7-point Gauss on [-1, 1]
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkResult {
  double k15, g7;
};

template <class F>
GkResult gk15(F f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7], g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double s = f(c - x) + f(c + x);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  return {k * h, g * h};
}

struct Panel {
  double a, b, val, err;
  int depth;
  bool operator<(const Panel& o) const { return err < o.err; }
};

// Globally adaptive G-K15 on [a, b]: bisect the worst panel until the summed
// error estimate meets max(abs_tol, rel_tol |I|).
template <class F>
double adapt(F& f, double a, double b, double abs_tol, double rel_tol, int max_depth,
             double& err_out) {
  auto make = [&](double lo, double hi, int depth) {
    const auto r = gk15(f, lo, hi);
    if (!std::isfinite(r.k15)) {
      std::ostringstream os;
      os << "quadrature: integrand not finite on [" << lo << ", " << hi << "]";
      throw ToleranceError(std::numeric_limits<double>::quiet_NaN(), os.str());
    }
    // rounding floor of the 15-point sum
    const double floor = 50 * std::numeric_limits<double>::epsilon() * std::abs(r.k15);
    return Panel{lo, hi, r.k15, std::max(std::abs(r.k15 - r.g7), floor), depth};
  };
  std::priority_queue<Panel> heap;
  heap.push(make(a, b, 0));
  double val = heap.top().val, err = heap.top().err;
  const size_t max_panels = 4096;
  while (err > std::max(abs_tol, rel_tol * std::abs(val)) && heap.size() < max_panels) {
    const Panel w = heap.top();
    if (w.depth >= max_depth) break;
    heap.pop();
    const double m = 0.5 * (w.a + w.b);
    const Panel l = make(w.a, m, w.depth + 1), r = make(m, w.b, w.depth + 1);
    val += l.val + r.val - w.val;
    err += l.err + r.err - w.err;
    heap.push(l);
    heap.push(r);
  }
  // resum to shed accumulated update error
  val = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    val += heap.top().val;
    err += heap.top().err;
    heap.pop();
  }
  err_out = err;
  return val;
}

}  // namespace detail

// [0, T] first, then panels [T, 2T], [2T, 4T], ... until one adds < abs_tol.
template <class F>
double integrate_half_line(F f, const QuadratureConfig& cfg) {
  cfg.validate();
  double err = 0.0, e = 0.0;
  double total = detail::adapt(f, 0.0, cfg.initial_limit, 0.5 * cfg.abs_tol, cfg.rel_tol, cfg.max_depth, e);
  err += e;
  double T = cfg.initial_limit;
  while (true) {
    const double part = detail::adapt(f, T, 2 * T, 0.25 * cfg.abs_tol, cfg.rel_tol, cfg.max_depth, e);
    err += e;
    total += part;
    T *= 2;
    if (std::abs(part) < cfg.abs_tol) break;
    if (T > cfg.max_limit) throw ToleranceError(total, "quadrature: integrand tail does not decay");
  }
  if (err > std::max(10 * cfg.abs_tol, 10 * cfg.rel_tol * std::abs(total))) {
    std::ostringstream os;
    os << "quadrature: error estimate " << err << " above tolerance";
    throw ToleranceError(total, os.str());
  }
  return total;
}

// ---------------------------------------------------------------------------
// Black-Scholes

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Unit forward, zero rates, strike e^k.
inline double bs_call(double k, double sigma, double tau) {
  if (!(sigma > 0 && tau > 0)) fail(ErrorKind::invalid_parameter, "bs_call: sigma, tau must be > 0");
  const double s = sigma * std::sqrt(tau);
  const double dp = -k / s + 0.5 * s, dm = dp - s;
  return norm_cdf(dp) - std::exp(k) * norm_cdf(dm);
}

inline double bs_put(double k, double sigma, double tau) {
  if (!(sigma > 0 && tau > 0)) fail(ErrorKind::invalid_parameter, "bs_put: sigma, tau must be > 0");
  const double s = sigma * std::sqrt(tau);
  const double dp = -k / s + 0.5 * s, dm = dp - s;
  return std::exp(k) * norm_cdf(-dm) - norm_cdf(-dp);
}

enum class OptionKind { call, put };

inline double bs_price_from_vol(OptionKind kind, double k, double sigma, double tau) {
  return kind == OptionKind::call ? bs_call(k, sigma, tau) : bs_put(k, sigma, tau);
}

struct ImpliedVolQuery {
  double price = 0.0;
  double k = 0.0;
  double tau = 1.0;
  OptionKind kind = OptionKind::call;
  double lo = 1e-4;
  double hi = 5.0;
};

inline double implied_vol(const ImpliedVolQuery& q) {
  const double ek = std::exp(q.k);
  const double lower = q.kind == OptionKind::call ? std::max(1 - ek, 0.0) : std::max(ek - 1, 0.0);
  const double upper = q.kind == OptionKind::call ? 1.0 : ek;
  if (!(q.price > lower && q.price < upper)) {
    std::ostringstream os;
    os << "implied_vol: price " << q.price << " outside the no-arbitrage band (" << lower << ", "
       << upper << ") at k = " << q.k;
    fail(ErrorKind::band, os.str());
  }
  auto g = [&](double s) { return bs_price_from_vol(q.kind, q.k, s, q.tau) - q.price; };
  double a = q.lo, b = q.hi;
  double ga = g(a), gb = g(b);
  if (gb < 0) {
    b = 10.0;
    gb = g(b);
  }
  if (ga > 0 || gb < 0) {
    std::ostringstream os;
    os << "implied_vol: no root in [" << q.lo << ", " << b << "] for price " << q.price;
    fail(ErrorKind::convergence, os.str());
  }
  // small prices need a relative stopping rule as well
  const double ptol = std::min(1e-12, 1e-9 * q.price);
  int side = 0;
  for (int it = 0; it < 400; ++it) {
    double m = (it < 4) ? 0.5 * (a + b) : b - gb * (b - a) / (gb - ga);
    if (!(m > a && m < b)) m = 0.5 * (a + b);
    const double gm = g(m);
    if (std::abs(gm) < ptol) return m;
    if (gm > 0) {
      b = m;
      gb = gm;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      a = m;
      ga = gm;
      if (side == 1) gb *= 0.5;
      side = 1;
    }
    if (b - a < 1e-12) return 0.5 * (a + b);
  }
  throw ToleranceError(0.5 * (a + b), "implied_vol: iteration limit");
}

// ---------------------------------------------------------------------------
// Fourier pricer

// Damping alpha for the call (alpha > 0) or put (alpha < -1) representation,
// kept at half the distance to the lmgf's finiteness bound.
inline double default_damping(const ModelSpec& m, const ForwardHorizon& h, OptionKind kind) {
  const auto [lo, hi] = moment_bounds(m, h);
  if (kind == OptionKind::call) return std::min(1.0, 0.5 * (hi - 1.0));
  return -1.0 - std::min(1.0, 0.5 * std::abs(lo));
}

inline double fourier_forward_price(const ModelSpec& m, const ForwardHorizon& h, double k,
                                    OptionKind kind, std::optional<double> damping = {},
                                    const QuadratureConfig& cfg = {}) {
  const double alpha = damping ? *damping : default_damping(m, h, kind);
  const bool call_strip = alpha > 0, put_strip = alpha < -1;
  if ((kind == OptionKind::call && !call_strip) || (kind == OptionKind::put && !put_strip) ||
      !real_finite(m, alpha + 1.0, h)) {
    std::ostringstream os;
    os << "fourier: damping alpha = " << alpha << " outside the admissible strip for the "
       << (kind == OptionKind::call ? "call" : "put");
    fail(ErrorKind::domain, os.str());
  }
  using C = std::complex<double>;
  auto f = [&](double w) {
    const C z(alpha + 1.0, w);
    const C a(alpha, w);
    const C val = std::exp(-a * k + forward_lmgf<double>(m, z, h)) / (a * z);
    return val.real();
  };
  const double v = integrate_half_line(f, cfg) / std::numbers::pi;
  // tiny negatives are quadrature noise on a price that is essentially zero
  if (v < 0) {
    if (v > -10 * cfg.abs_tol) return 0.0;
    std::ostringstream os;
    os << "fourier: negative price " << v << " at k = " << k;
    throw ToleranceError(v, os.str());
  }
  return v;
}

inline double fourier_forward_call(const ModelSpec& m, const ForwardHorizon& h, double k,
                                   std::optional<double> damping = {},
                                   const QuadratureConfig& cfg = {}) {
  return fourier_forward_price(m, h, k, OptionKind::call, damping, cfg);
}

inline double fourier_forward_put(const ModelSpec& m, const ForwardHorizon& h, double k,
                                  std::optional<double> damping = {},
                                  const QuadratureConfig& cfg = {}) {
  return fourier_forward_price(m, h, k, OptionKind::put, damping, cfg);
}

enum class StrikeConvention { log_strike, scaled };

// Implied vol of the out-of-the-money option at log-strike k (or k tau).
inline double reference_vol(const ModelSpec& m, const ForwardHorizon& h, double k,
                            StrikeConvention conv, const QuadratureConfig& cfg = {}) {
  const double x = conv == StrikeConvention::log_strike ? k : k * h.tau;
  const OptionKind kind = x < 0 ? OptionKind::put : OptionKind::call;
  const double price = fourier_forward_price(m, h, x, kind, {}, cfg);
  return implied_vol({price, x, h.tau, kind});
}

inline std::vector<double> forward_smile_reference(const ModelSpec& m, const ForwardHorizon& h,
                                                   const std::vector<double>& grid,
                                                   StrikeConvention conv,
                                                   const QuadratureConfig& cfg = {}) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double k : grid) out.push_back(reference_vol(m, h, k, conv, cfg));
  return out;
}

}  // namespace fwdsmile

#pragma once

// Forward implied-variance expansions: diagonal small maturity (strike e^k)
// and large maturity (strike e^{k tau}), plus the Heston ATM formulas.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fwdsmile/errors.hpp"
#include "fwdsmile/expansions.hpp"
#include "fwdsmile/pricing.hpp"
#include "fwdsmile/saddle.hpp"

namespace fwdsmile {

inline constexpr double kAtmGuard = 1e-3;
inline constexpr double kBoundaryLimitBand = 1e-4;
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Expansion terms at one strike. variance(order) is the truncated sum.
struct SmileValue {
  double v0 = kNaN, v1 = kNaN, v2 = kNaN;
  double scale = 1.0;  // eps (small maturity) or 1/tau (large maturity)
  std::string flag;    // "", "atm", "boundary", "near-singular"

  double variance(int order) const {
    double s = v0;
    if (order >= 1) s += v1 * scale;
    if (order >= 2) s += v2 * scale * scale;
    return s;
  }
};

inline void require_regular_paths(const RegimeCoefficients& rc) {
  const double d = lambda0_prime(rc, 0.0);
  if (std::abs(d) > 1e-9) {
    std::ostringstream os;
    os << "small-maturity smile: Lambda0'(0) = " << d << " != 0";
    fail(ErrorKind::regularity, os.str());
  }
}

// ---------------------------------------------------------------------------
// Heston diagonal ATM

struct HestonNu {
  double nu0, nu1, nu2;
};

inline HestonNu heston_nu(const ForwardHorizon& h, const HestonParams& p,
                          Measure m = Measure::typeI) {
  const double t = h.t, tau = h.tau, v = p.v, th = p.theta, k = p.kappa, xi = p.xi, r = p.rho;
  const double r2 = r * r, x2 = xi * xi;
  HestonNu n;
  n.nu0 = tau / 48 * (24 * k * th + x2 * (r2 - 4) + 12 * v * (xi * r - 2 * k)) -
          t / 4 * (x2 + 4 * k * (v - th));
  n.nu1 = r * xi * tau / (24 * v) * (x2 * (1 - r2) - 2 * k * (v + th) + xi * r * v) +
          r * xi * x2 * t / (8 * v);
  n.nu2 = (80 * k * th * (13 * r2 - 6) + x2 * (521 * r2 * r2 - 712 * r2 + 176) +
           40 * r2 * v * (xi * r - 2 * k)) *
              x2 * tau / (7680 * v * v) -
          x2 * t / (192 * v * v) * (4 * k * th * (16 - 7 * r2) + (7 * r2 - 4) * (9 * x2 + 4 * k * v)) +
          x2 * t * t / (32 * tau * v * v) * (4 * k * (v - 3 * th) + 9 * x2);
  if (m == Measure::typeII) {
    n.nu0 += xi * r * v * t;
    n.nu2 += r * xi * x2 * t * (7 * r2 - 4) / (48 * v) - r * xi * x2 * t * t / (8 * v * tau);
  }
  return n;
}

// Order-0 and order-1 polynomials in k; variance = a + eps b.
struct HestonAtmPoly {
  double level0, slope0, curv0;  // eps^0
  HestonNu nu;                   // eps^1
};

inline HestonAtmPoly heston_atm_poly(const ForwardHorizon& h, const HestonParams& p,
                                     Measure m = Measure::typeI) {
  const double v = p.v, xi = p.xi, r = p.rho;
  HestonAtmPoly a;
  a.level0 = v;
  a.slope0 = r * xi / 2;
  a.curv0 = (4 - 7 * r * r) * xi * xi / (48 * v) + xi * xi * h.t / (4 * h.tau * v);
  a.nu = heston_nu(h, p, m);
  return a;
}

inline double heston_atm_diag(double k, const ForwardHorizon& h, double eps, const HestonParams& p,
                              Measure m = Measure::typeI) {
  const auto a = heston_atm_poly(h, p, m);
  return a.level0 + eps * a.nu.nu0 + (a.slope0 + eps * a.nu.nu1) * k +
         (a.curv0 + eps * a.nu.nu2) * k * k;
}

struct SkewConvexity {
  double skew;
  double convexity;
};

// d/dk and d^2/dk^2 of the implied vol (not variance) at k = 0.
inline SkewConvexity heston_atm_skew_convexity(const ForwardHorizon& h, double eps,
                                               const HestonParams& p, Measure m = Measure::typeI) {
  const double t = h.t, tau = h.tau, v = p.v, xi = p.xi, r = p.rho;
  const auto n = heston_nu(h, p, m);
  const double sv = std::sqrt(v);
  SkewConvexity out;
  out.skew = xi * r / (4 * sv) + eps * (4 * n.nu1 * v - xi * r * n.nu0) / (8 * v * sv);
  out.convexity = xi * xi * ((2 - 5 * r * r) * tau + 6 * t) / (24 * tau * v * sv) -
                  eps * (n.nu0 * xi * xi * (3 * t + (1 - 4 * r * r) * tau) +
                         6 * tau * v * (r * xi * n.nu1 - 4 * n.nu2 * v)) /
                      (24 * tau * v * v * sv);
  return out;
}

// ---------------------------------------------------------------------------
// Heston large-maturity ATM

struct HestonLMAtm {
  double v0;
  double v1;
};

inline HestonLMAtm heston_lm_atm(double t, const HestonParams& p) {
  const auto rep = heston_lm_domain(t, p);
  if (rep.lm_case != HestonLMCase::III)
    fail(ErrorKind::unsupported, std::string("heston_lm_atm: Case ") + to_string(rep.lm_case) +
                                     " is not covered by the large-maturity expansion");
  const double k = p.kappa, th = p.theta, xi = p.xi, r = p.rho, v = p.v, eta = rep.eta;
  const double r2 = r * r, x2 = xi * xi;
  const double ekt = std::exp(k * t);
  const double D = 2 * k * (1 + ekt * (1 - 2 * r2)) - (1 - ekt) * (r * xi + eta);
  HestonLMAtm out;
  out.v0 = 4 * th * k * (eta - 2 * k + xi * r) / (x2 * (1 - r2));
  out.v1 = 16 * k * v * (r * xi - 2 * k + eta) / (D * x2) +
           16 * k * th / x2 *
               std::log(D * std::exp(-k * t) * (2 * k - xi * r + (1 - 2 * r2) * eta) /
                        (8 * k * (1 - r2) * (1 - r2) * eta)) -
           8 * std::log(xi * std::pow(1 - r2, 1.5) * std::sqrt(eta * (2 * xi * r - 4 * k + 2 * eta)) /
                        ((xi * (1 - 2 * r2) - r * (eta - 2 * k)) * (r * (eta - 2 * k) + xi)));
  return out;
}

// ---------------------------------------------------------------------------
// Generic expansions

// sigma^2_{eps t, eps tau}(k) = v0 + v1 eps + v2 eps^2. Inside the ATM guard band
// Heston switches to the ATM polynomial (v2 unavailable there); other models fail.
inline SmileValue smallmat_smile(const RegimeCoefficients& rc, double k, double eps) {
  if (rc.regime != Regime::small_maturity)
    fail(ErrorKind::invalid_parameter, "smallmat_smile: coefficients are not small-maturity");
  if (!(eps > 0)) fail(ErrorKind::invalid_parameter, "smallmat_smile: epsilon must be > 0");
  require_regular_paths(rc);
  const double tau = rc.horizon.tau;
  SmileValue out;
  out.scale = eps;
  if (std::abs(k) < kAtmGuard) {
    if (!rc.heston) {
      std::ostringstream os;
      os << "smallmat_smile: |k| = " << std::abs(k) << " inside the ATM guard band " << kAtmGuard;
      fail(ErrorKind::singular_strike, os.str());
    }
    const auto a = heston_atm_poly(rc.horizon, rc.heston->p, rc.heston->measure);
    out.v0 = a.level0 + a.slope0 * k + a.curv0 * k * k;
    out.v1 = a.nu.nu0 + a.nu.nu1 * k + a.nu.nu2 * k * k;
    out.flag = "atm";
    return out;
  }
  const auto s = solve_saddle(rc, k);
  const double u = s.u_star, l02 = s.d0[2];
  const double v0 = k * k / (2 * tau * s.lambda_star);
  const double v1 = v0 * v0 * tau / k *
                    (1 + 2 / k * (std::log(k * k / (u * u * std::sqrt(l02) * std::pow(tau * v0, 1.5))) + s.l1));
  const double v2 = 2 * tau * tau * v0 * v0 * v0 / (k * k) * (3 / (k * k) + 0.125) +
                    2 * tau * v0 * v0 / (k * k) * (upsilon(0.0, s) + 1 / u) + v1 * v1 / v0 -
                    3 * tau / (k * k) * v0 * v1;
  out.v0 = v0;
  out.v1 = v1;
  out.v2 = v2;
  return out;
}

inline double largemat_v0(double k, double lambda_star, bool inside) {
  const double q = std::max(0.0, lambda_star * (lambda_star - k));
  return 2 * (2 * lambda_star - k + (inside ? 2 : -2) * std::sqrt(q));
}

// sigma^2_{t,tau}(k tau) = v0 + v1/tau + v2/tau^2.
inline SmileValue largemat_smile(const RegimeCoefficients& rc, double k, double tau) {
  if (rc.regime != Regime::large_maturity)
    fail(ErrorKind::invalid_parameter, "largemat_smile: coefficients are not large-maturity");
  if (!(tau > 0)) fail(ErrorKind::invalid_parameter, "largemat_smile: tau must be > 0");
  if (std::abs(rc.lambda0(1.0)) > 1e-10)
    fail(ErrorKind::martingale, "largemat_smile: Lambda0(1) != 0");
  SmileValue out;
  out.scale = 1 / tau;
  const double plo = rc.singular_lo, phi = rc.singular_c;
  const auto s = solve_saddle(rc, k);
  const bool inside = k > plo && k < phi;
  const double v0 = largemat_v0(k, s.lambda_star, inside);
  out.v0 = v0;

  for (double p : {plo, phi}) {
    if (std::abs(k - p) < kBoundaryLimitBand) {
      const auto sp = solve_saddle(rc, p);
      const double v0p = p >= phi ? 2 * p : -2 * p;
      const double sg = p >= 0 ? 1.0 : -1.0;
      const double l02 = sp.d0[2], l03 = sp.d0[3], l11 = sp.d1[1];
      out.v1 = 2 - 2 * std::sqrt(v0p / l02) * (1 + sg * (l03 / (6 * l02) - l11));
      out.flag = "boundary";
      return out;
    }
  }
  const double u = s.u_star, l02 = s.d0[2];
  const double d = 4 * k * k - v0 * v0;
  const double v1 = 8 * v0 * v0 / d *
                    (s.l1 + std::log(d / (4 * (u - 1) * u * std::pow(v0, 1.5) * std::sqrt(l02))));
  const double e = v0 * v0 - 4 * k * k;
  const double k2 = k * k, k4 = k2 * k2, k6 = k4 * k2;
  const double v02 = v0 * v0, v03 = v02 * v0, v04 = v02 * v02, v06 = v04 * v02;
  const double v2 = 4 / (v0 * e * e * e) *
                    (8 * k4 * v1 * v02 * (v1 + 6) - 16 * k6 * v1 * v1 - 2 * upsilon(1.0, s) * v03 * e * e -
                     k2 * v04 * (96 + v1 * v1 + 8 * v1) - v06 * (v1 + 8));
  out.v1 = v1;
  out.v2 = v2;
  if (std::abs(k - plo) < kSingularGuard || std::abs(k - phi) < kSingularGuard) out.flag = "near-singular";
  return out;
}

// Limit conditions for v1, v2 at k = 0, reported without judgement:
// Lambda0'(0), 2 Lambda1'(0) + Lambda0''(0), 6 Lambda2'(0) + 3 Lambda1''(0) + Lambda0'''(0).
struct AtmLimitDiagnostics {
  double c0, c1, c2;
};

inline AtmLimitDiagnostics atm_limit_diagnostics(const RegimeCoefficients& rc) {
  const auto db = derivative_bundle(rc, 0.0);
  const double h = 1e-3;
  double l21 = 0.0;
  if (rc.domain.interior(-h) && rc.domain.interior(h)) l21 = (rc.lambda2(h) - rc.lambda2(-h)) / (2 * h);
  return {db.d0[1], 2 * db.d1[1] + db.d0[2], 6 * l21 + 3 * db.d1[2] + db.d0[3]};
}

// ---------------------------------------------------------------------------
// Grid assembly

struct SmilePoint {
  double k = 0.0;
  double strike = 0.0;
  double v[3] = {kNaN, kNaN, kNaN};
  double sigma[3] = {kNaN, kNaN, kNaN};
  std::optional<double> sigma_ref;
  double err[3] = {kNaN, kNaN, kNaN};
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
};

struct SmileCurve {
  Regime regime = Regime::small_maturity;
  ForwardHorizon horizon;  // actual (t, tau) of the quoted options
  double epsilon = 1.0;    // small maturity only
  int order = 2;
  std::vector<SmilePoint> points;
  int warnings = 0;
};

// Reference vol at k in the curve's own strike coordinate.
using ReferenceVol = std::function<double(double k)>;

struct SmileRequest {
  double epsilon = 1.0;  // small maturity
  double tau = 1.0;      // large maturity
  int order = 2;
  int jobs = 1;
};

inline const char* error_flag(ErrorKind k) {
  switch (k) {
    case ErrorKind::singular_strike: return "singular";
    case ErrorKind::boundary_saturation: return "saturated";
    case ErrorKind::boundary_clearance: return "clearance";
    case ErrorKind::convergence: return "no-convergence";
    case ErrorKind::domain: return "domain";
    default: return "error";
  }
}

template <class F>
void parallel_for(size_t n, int jobs, F body) {
  const size_t nj = std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(jobs, 1)), n));
  if (nj <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (size_t j = 0; j < nj; ++j)
    pool.emplace_back([&, j] {
      for (size_t i = j; i < n; i += nj) body(i);
    });
  for (auto& th : pool) th.join();
}

inline SmileCurve smile_from_expansion(const RegimeCoefficients& rc, const std::vector<double>& grid,
                                       const SmileRequest& req, const ReferenceVol& ref = {}) {
  if (req.order < 0 || req.order > 2) fail(ErrorKind::invalid_parameter, "smile: order in {0,1,2}");
  SmileCurve c;
  c.regime = rc.regime;
  c.order = req.order;
  if (rc.regime == Regime::small_maturity) {
    require_regular_paths(rc);
    c.epsilon = req.epsilon;
    c.horizon = {req.epsilon * rc.horizon.t, req.epsilon * rc.horizon.tau};
  } else {
    c.horizon = {rc.horizon.t, req.tau};
  }
  c.points.resize(grid.size());
  std::vector<int> warn(grid.size(), 0);
  parallel_for(grid.size(), req.jobs, [&](size_t i) {
    SmilePoint& pt = c.points[i];
    const double k = grid[i];
    pt.k = k;
    pt.strike = rc.regime == Regime::small_maturity ? std::exp(k) : std::exp(k * req.tau);
    try {
      const SmileValue sv = rc.regime == Regime::small_maturity ? smallmat_smile(rc, k, req.epsilon)
                                                                : largemat_smile(rc, k, req.tau);
      pt.v[0] = sv.v0;
      pt.v[1] = sv.v1;
      pt.v[2] = sv.v2;
      if (!sv.flag.empty()) pt.flags.push_back(sv.flag);
      for (int o = 0; o <= 2; ++o) {
        const double var = sv.variance(o);
        if (std::isfinite(var) && var > 0)
          pt.sigma[o] = std::sqrt(var);
        else if (!std::isnan(var) && o <= req.order)
          pt.flags.push_back("invalid" + std::to_string(o));
      }
    } catch (const Error& e) {
      pt.flags.push_back(error_flag(e.kind()));
    } catch (const std::exception&) {
      pt.flags.push_back("error");
    }
    if (ref) {
      try {
        pt.sigma_ref = ref(k);
        for (int o = 0; o <= 2; ++o) pt.err[o] = std::abs(pt.sigma[o] - *pt.sigma_ref);
      } catch (const std::exception&) {
        pt.flags.push_back("oracle-failed");
        warn[i] = 1;
      }
    }
  });
  for (int w : warn) c.warnings += w;
  return c;
}

}  // namespace fwdsmile

#pragma once

// Saddlepoint u*(k) of Lambda0'(u) = k, the rate Lambda*(k) = u* k - Lambda0(u*),
// and the derivative bundle consumed by Upsilon.

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "fwdsmile/errors.hpp"
#include "fwdsmile/expansions.hpp"
#include "fwdsmile/jet.hpp"
#include "fwdsmile/models.hpp"

namespace fwdsmile {

inline constexpr double kSingularGuard = 1e-3;

enum class DerivativeMethod { jet, finite_difference };

// d0[j] = Lambda0^(j), j = 0..4; d1[j] = Lambda1^(j), j = 0..2; l2 = Lambda2.
struct DerivativeBundle {
  std::array<double, 5> d0{};
  std::array<double, 3> d1{};
  double l2 = 0.0;
};

struct SaddleData {
  double k = 0.0;
  double u_star = 0.0;
  double lambda_star = 0.0;
  std::array<double, 5> d0{};  // index = derivative order (d0[0] = Lambda0(u*))
  std::array<double, 3> d1{};  // index = derivative order (d1[0] = Lambda1(u*))
  double l1 = 0.0;
  double l2 = 0.0;
  bool singular = false;  // k within kSingularGuard of Lambda0'(0) or Lambda0'(c)
};

namespace detail {

// Richardson-extrapolated central differences of g at u, orders 1..max_order.
template <class G>
std::array<double, 5> fd_derivatives(G g, double u, int max_order, const Domain& dom) {
  double h = std::max(1e-4, 1e-3 * std::abs(u));
  int shrinks = 0;
  // stencil reaches u +- 2h; keep it strictly inside
  auto fits = [&](double s) { return dom.interior(u - 2 * s) && dom.interior(u + 2 * s); };
  while (!fits(h)) {
    if (++shrinks > 4) {
      std::ostringstream os;
      os << "derivative_bundle: stencil at u = " << u << " does not fit inside the domain ("
         << dom.lo << ", " << dom.hi << ")";
      fail(ErrorKind::boundary_clearance, os.str());
    }
    h *= 0.5;
  }
  auto stencil = [&](double s) {
    const double fm2 = g(u - 2 * s), fm1 = g(u - s), f0 = g(u), fp1 = g(u + s),
                 fp2 = g(u + 2 * s);
    std::array<double, 5> d{};
    d[0] = f0;
    d[1] = (fp1 - fm1) / (2 * s);
    d[2] = (fp1 - 2 * f0 + fm1) / (s * s);
    d[3] = (fp2 - 2 * fp1 + 2 * fm1 - fm2) / (2 * s * s * s);
    d[4] = (fp2 - 4 * fp1 + 6 * f0 - 4 * fm1 + fm2) / (s * s * s * s);
    return d;
  };
  // Higher orders lose ~eps/h^j to rounding, so they get wider steps when the domain allows.
  constexpr std::array<double, 5> widen = {1.0, 1.0, 10.0, 30.0, 60.0};
  std::array<double, 5> out{};
  out[0] = g(u);
  for (int j = 1; j <= max_order; ++j) {
    const double room = std::min(u - dom.lo, dom.hi - u);  // may be inf
    const double s = std::max(h, std::min(h * widen[j], room / 40));
    const auto a = stencil(s), b = stencil(0.5 * s);
    out[j] = (4 * b[j] - a[j]) / 3;
  }
  return out;
}

}  // namespace detail

inline DerivativeBundle derivative_bundle(const RegimeCoefficients& rc, double u,
                                          DerivativeMethod method = DerivativeMethod::jet) {
  DerivativeBundle out;
  if (method == DerivativeMethod::jet && rc.lambda0_jet && rc.lambda1_jet) {
    const Jet4 j0 = rc.lambda0_jet(u), j1 = rc.lambda1_jet(u);
    for (int i = 0; i <= 4; ++i) out.d0[i] = j0.deriv(i);
    for (int i = 0; i <= 2; ++i) out.d1[i] = j1.deriv(i);
  } else {
    const auto a = detail::fd_derivatives(rc.lambda0, u, 4, rc.domain);
    const auto b = detail::fd_derivatives(rc.lambda1, u, 2, rc.domain);
    out.d0 = a;
    for (int i = 0; i <= 2; ++i) out.d1[i] = b[i];
  }
  out.l2 = rc.lambda2(u);
  return out;
}

inline double lambda0_prime(const RegimeCoefficients& rc, double u) {
  if (rc.lambda0_jet) return rc.lambda0_jet(u).deriv(1);
  return detail::fd_derivatives(rc.lambda0, u, 1, rc.domain)[1];
}

// u* by bracketing from 0 toward the domain edge that Lambda0' must cross.
inline double solve_saddle_point(const RegimeCoefficients& rc, double k) {
  const auto& dom = rc.domain;
  auto g = [&](double u) { return lambda0_prime(rc, u) - k; };
  const double tol = 1e-12 * std::max(1.0, std::abs(k));

  double a = 0.0;
  double ga = g(a);
  if (std::abs(ga) <= tol) return a;
  const double dir = ga < 0 ? 1.0 : -1.0;
  const double edge = dir > 0 ? dom.hi : dom.lo;

  double b = a, gb = ga;
  bool found = false;
  if (std::isfinite(edge)) {
    double gap = std::abs(edge - a);
    for (int n = 1; n <= 80; ++n) {
      gap *= 0.5;
      const double x = edge - dir * gap;
      if (x == edge) break;
      const double gx = g(x);
      if (!std::isfinite(gx)) break;
      if ((gx > 0) != (ga > 0) || gx == 0) {
        b = x;
        gb = gx;
        found = true;
        break;
      }
      a = x;
      ga = gx;
    }
  } else {
    double s = 1.0;
    for (int n = 0; n < 200; ++n) {
      const double x = dir * s;
      const double gx = g(x);
      if (!std::isfinite(gx)) break;
      if ((gx > 0) != (ga > 0) || gx == 0) {
        b = x;
        gb = gx;
        found = true;
        break;
      }
      a = x;
      ga = gx;
      s *= 2.0;
    }
  }
  if (!found) {
    std::ostringstream os;
    os << "saddle: Lambda0' does not reach k = " << k << " before the "
       << (dir > 0 ? "upper" : "lower") << " domain boundary " << edge;
    fail(ErrorKind::boundary_saturation, os.str());
  }
  if (gb == 0) return b;

  // Newton steps on the converged root while they reduce |g|
  auto polish = [&](double x, double gx) {
    if (!rc.lambda0_jet) return x;
    for (int i = 0; i < 3 && gx != 0; ++i) {
      const double d2 = rc.lambda0_jet(x).deriv(2);
      const double y = x - gx / d2;
      if (!(y > std::min(a, b) && y < std::max(a, b))) break;
      const double gy = g(y);
      if (!(std::abs(gy) < std::abs(gx))) break;
      x = y;
      gx = gy;
    }
    return x;
  };

  // bisection, with Illinois-style secant steps once the bracket is tight
  int side = 0;
  for (int it = 0; it < 300; ++it) {
    double m;
    if (it < 8 || std::abs(b - a) > 1e-3 * std::max(1.0, std::abs(a) + std::abs(b)))
      m = 0.5 * (a + b);
    else
      m = b - gb * (b - a) / (gb - ga);
    if (!(m > std::min(a, b) && m < std::max(a, b))) m = 0.5 * (a + b);
    const double gm = g(m);
    if (std::abs(gm) <= tol) return polish(m, gm);
    if ((gm > 0) == (gb > 0)) {
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
    if (a == b || std::nextafter(a, b) == b) break;
  }
  const double best = std::abs(ga) < std::abs(gb) ? a : b;
  if (std::abs(g(best)) <= 1e-9 * std::max(1.0, std::abs(k))) return best;
  throw ToleranceError(best, "saddle: root finder did not converge");
}

inline SaddleData solve_saddle(const RegimeCoefficients& rc, double k,
                               DerivativeMethod method = DerivativeMethod::jet) {
  if (!std::isfinite(k)) fail(ErrorKind::domain, "saddle: k must be finite");
  SaddleData s;
  s.k = k;
  s.u_star = solve_saddle_point(rc, k);
  const auto db = derivative_bundle(rc, s.u_star, method);
  s.d0 = db.d0;
  s.d1 = db.d1;
  s.l1 = db.d1[0];
  s.l2 = db.l2;
  s.lambda_star = s.u_star * k - s.d0[0];
  s.singular = std::abs(k - rc.singular_lo) < kSingularGuard ||
               std::abs(k - rc.singular_c) < kSingularGuard;
  return s;
}

// Lambda*(k) alone (no Lambda2 evaluation).
inline double rate_function(const RegimeCoefficients& rc, double k) {
  const double u = solve_saddle_point(rc, k);
  return u * k - rc.lambda0(u);
}

struct ClosedSaddle {
  double u_star;
  double lambda_star;
};

// Heston large maturity: q*(k) and V*(k).
inline ClosedSaddle heston_lm_saddle_closed(double k, const HestonParams& p) {
  p.validate_large_maturity();
  const double kap = p.kappa, th = p.theta, xi = p.xi, rho = p.rho;
  const double eta = std::sqrt(xi * xi * (1 - rho * rho) + (2 * kap - rho * xi) * (2 * kap - rho * xi));
  const double kt = kap * th;
  const double q = (xi - 2 * kap * rho +
                    (kt * rho + k * xi) * eta / std::sqrt(k * k * xi * xi + 2 * k * kt * rho * xi + kt * kt)) /
                   (2 * xi * (1 - rho * rho));
  return {q, q * k - heston_lm_V(q, p)};
}

// Pure VG: root of phi'(u) = k written without the 0/0 at k = mu.
inline ClosedSaddle vg_saddle_closed(double k, const VarianceGammaParams& vg) {
  vg.validate();
  const double C = vg.C, G = vg.G, M = vg.M;
  const double x = k - vg.mu(), s = G + M;
  const double u = 0.5 * (M - G) + s * s * x / (2 * (2 * C + std::sqrt(4 * C * C + s * s * x * x)));
  return {u, k * u - levy_exponent_real(u, LevySpec{vg})};
}

}  // namespace fwdsmile

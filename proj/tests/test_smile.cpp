#include <gtest/gtest.h>

#include <cmath>

#include "fwdsmile/oracle.hpp"
#include "fwdsmile/smile.hpp"

using namespace fwdsmile;

namespace {
const HestonParams kDiag{0.07, 0.07, 1.0, 0.34, -0.8};
const ForwardHorizon kDiagH{0.5, 1.0 / 12};
const HestonParams kLarge{0.07, 0.07, 1.5, 0.34, -0.25};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(a + (b - a) * i / (n - 1.0));
  return g;
}

double slope_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace

TEST(SmallMaturity, BlackScholesFlat) {
  const double s = 0.25, s2 = s * s;
  const auto rc = bs_coeffs(s, Regime::small_maturity, 0.5);
  for (double k : linspace(-0.5, 0.5, 41)) {
    if (std::abs(k) < 0.01) continue;
    const auto v = smallmat_smile(rc, k, 0.1);
    EXPECT_NEAR(v.v0, s2, 1e-10 * s2);
    EXPECT_LT(std::abs(v.v1), 1e-10 * s2);
    EXPECT_LT(std::abs(v.v2), 1e-10 * s2);
  }
}

TEST(SmallMaturity, HestonAgainstOracle) {
  const auto rc = heston_diag_coeffs(kDiagH, kDiag);
  const double ref = reference_vol(HestonModel{kDiag}, kDiagH, 0.05, StrikeConvention::log_strike);
  EXPECT_LT(std::abs(std::sqrt(smallmat_smile(rc, 0.05, 1.0).variance(2)) - ref), 1e-2);
}

TEST(SmallMaturity, LevelTendsToInitialVariance) {
  const auto rc = heston_diag_coeffs(kDiagH, kDiag);
  double prev = 1.0;
  for (double k : {0.02, 0.01, 0.005, 0.002}) {
    const double gap = std::abs(smallmat_smile(rc, k, 1.0).v0 - kDiag.v);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(SmallMaturity, AtmBandUsesHestonPolynomial) {
  const auto rc = heston_diag_coeffs(kDiagH, kDiag);
  const auto v = smallmat_smile(rc, 5e-4, 1.0);
  EXPECT_EQ(v.flag, "atm");
  EXPECT_NEAR(v.variance(1), heston_atm_diag(5e-4, kDiagH, 1.0, kDiag), 1e-15);
  EXPECT_TRUE(std::isnan(v.v2));
  EXPECT_THROW(smallmat_smile(bs_coeffs(0.2, Regime::small_maturity, 1.0), 5e-4, 1.0), Error);
}

TEST(SmallMaturity, RegularityRequired) {
  const auto rc = tclevy_lm_coeffs(1.0, VarianceGammaParams{6.5, 11.1, 33.4}, TrivialClock{});
  RegimeCoefficients bad = rc;
  bad.regime = Regime::small_maturity;
  bad.c = 0.0;
  try {
    smallmat_smile(bad, 0.1, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::regularity);
  }
}

TEST(SmallMaturity, AtmConsistencyIsCubic) {
  const auto rc = heston_diag_coeffs(kDiagH, kDiag);
  std::vector<double> ks, ds;
  for (double k : {1.0001e-3, 2e-3, 3e-3, 5e-3, 7e-3, 1e-2}) {
    ks.push_back(k);
    ds.push_back(std::abs(smallmat_smile(rc, k, 1.0).variance(1) - heston_atm_diag(k, kDiagH, 1.0, kDiag)));
  }
  EXPECT_GE(slope_loglog(ks, ds), 2.7);
}

TEST(LargeMaturity, BlackScholesFlat) {
  const double s = 0.2, s2 = s * s;
  const auto rc = bs_coeffs(s, Regime::large_maturity);
  // v2 carries (s^4 - 4k^2)^-3, so rounding in v0 is amplified near +-s^2/2;
  // keep a clearance of s^2/4 from those strikes
  for (double k : linspace(-0.3, 0.3, 41)) {
    if (std::abs(std::abs(k) - 0.5 * s2) < 0.25 * s2 - 1e-12) continue;
    const auto v = largemat_smile(rc, k, 10.0);
    EXPECT_NEAR(v.v0, s2, 1e-10 * s2) << k;
    EXPECT_LT(std::abs(v.v1), 1e-10 * s2) << k;
    EXPECT_LT(std::abs(v.v2), 1e-10 * s2) << k;
  }
}

TEST(LargeMaturity, LevelAtSingularStrikes) {
  const auto rc = heston_lm_coeffs(1.0, kLarge);
  const auto lo = largemat_smile(rc, rc.singular_lo, 5.0), hi = largemat_smile(rc, rc.singular_c, 5.0);
  EXPECT_NEAR(hi.v0, 2 * rc.singular_c, 1e-10);
  EXPECT_NEAR(lo.v0, -2 * rc.singular_lo, 1e-10);
  EXPECT_EQ(hi.flag, "boundary");
}

TEST(LargeMaturity, LevelBounds) {
  const auto rc = heston_lm_coeffs(1.0, kLarge);
  for (double k : linspace(-0.3, 0.3, 121)) {
    if (std::abs(k - rc.singular_lo) < 1e-6 || std::abs(k - rc.singular_c) < 1e-6) continue;
    const double v0 = largemat_smile(rc, k, 5.0).v0;
    if (k > rc.singular_lo && k < rc.singular_c) {
      EXPECT_GT(v0, 2 * std::abs(k));
    } else {
      EXPECT_GT(v0, 0.0);
      EXPECT_LT(v0, 2 * std::abs(k));
    }
  }
}

TEST(LargeMaturity, LevelContinuousAcrossBoundaries) {
  const auto rc = heston_lm_coeffs(1.0, kLarge);
  for (double p : {rc.singular_lo, rc.singular_c}) {
    const double a = largemat_smile(rc, p - 1e-10, 5.0).v0, b = largemat_smile(rc, p + 1e-10, 5.0).v0;
    EXPECT_NEAR(a, b, 1e-8);
  }
}

TEST(LargeMaturity, FirstOrderContinuityLimit) {
  const auto rc = heston_lm_coeffs(1.0, kLarge);
  for (double p : {rc.singular_lo, rc.singular_c}) {
    const double lim = largemat_smile(rc, p, 5.0).v1;
    EXPECT_NEAR(largemat_smile(rc, p - 1e-3, 5.0).v1, lim, 1e-3);
    EXPECT_NEAR(largemat_smile(rc, p + 1e-3, 5.0).v1, lim, 1e-3);
  }
}

TEST(LargeMaturity, HestonLevelIndependentOfStartDate) {
  const auto a = heston_lm_coeffs(0.0, kLarge), b = heston_lm_coeffs(0.5, kLarge), c = heston_lm_coeffs(1.0, kLarge);
  for (double k : linspace(-0.2, 0.2, 21)) {
    const double v = largemat_smile(a, k, 5.0).v0;
    EXPECT_NEAR(largemat_smile(b, k, 5.0).v0, v, 1e-12);
    EXPECT_NEAR(largemat_smile(c, k, 5.0).v0, v, 1e-12);
  }
}

TEST(LargeMaturity, FellerClockForwardLevelBelowSpot) {
  const VarianceGammaParams vg{58.12, 50.5, 69.37};
  const FellerClockParams fc{1.0, 0.9, 1.23, 1.6};  // v >= theta
  const auto spot = tclevy_lm_coeffs(0.0, vg, fc);
  for (double t : {0.02, 0.05, 0.1}) {
    const auto fwd = tclevy_lm_coeffs(t, vg, fc);
    for (double k : linspace(spot.singular_lo, spot.singular_c, 12)) {
      if (std::abs(k - spot.singular_lo) < 2e-3 || std::abs(k - spot.singular_c) < 2e-3) continue;
      EXPECT_LE(largemat_smile(fwd, k, 2.0).v1, largemat_smile(spot, k, 2.0).v1) << "t = " << t << " k = " << k;
    }
  }
}

TEST(LargeMaturity, MartingaleRequired) {
  auto rc = bs_coeffs(0.2, Regime::large_maturity);
  rc.lambda0 = [](double u) { return 0.02 * u * u; };
  try {
    largemat_smile(rc, 0.1, 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::martingale);
  }
}

TEST(HestonAtm, Nu0ReferenceValue) { EXPECT_NEAR(heston_nu(kDiagH, kDiag).nu0, -0.01552, 1e-5); }

TEST(HestonAtm, TypeIIEqualsTypeIWhenUncorrelatedOrSpot) {
  HestonParams p0 = kDiag;
  p0.rho = 0.0;
  for (auto [h, p] : {std::pair{kDiagH, p0}, std::pair{ForwardHorizon{0.0, 1.0 / 12}, kDiag}}) {
    const auto a = heston_nu(h, p, Measure::typeI), b = heston_nu(h, p, Measure::typeII);
    EXPECT_NEAR(a.nu0, b.nu0, 1e-12);
    EXPECT_NEAR(a.nu1, b.nu1, 1e-12);
    EXPECT_NEAR(a.nu2, b.nu2, 1e-12);
  }
}

TEST(HestonAtm, SpotLevel) {
  const auto& p = kDiag;
  const double tau = 1.0 / 12;
  const double expect = tau / 48 * (24 * p.kappa * p.theta + p.xi * p.xi * (p.rho * p.rho - 4) + 12 * p.v * (p.xi * p.rho - 2 * p.kappa));
  EXPECT_NEAR(heston_nu({0.0, tau}, p).nu0, expect, 1e-15);
}

TEST(HestonAtm, SkewAndConvexity) {
  HestonParams p0 = kDiag;
  p0.rho = 0.0;
  EXPECT_NEAR(heston_atm_skew_convexity(kDiagH, 0.0, p0).skew, 0.0, 1e-15);
  const auto& p = kDiag;
  const double diff = heston_atm_skew_convexity(kDiagH, 0.0, p).convexity -
                      heston_atm_skew_convexity({0.0, kDiagH.tau}, 0.0, p).convexity;
  EXPECT_NEAR(diff, p.xi * p.xi * kDiagH.t / (4 * kDiagH.tau * std::pow(p.v, 1.5)), 1e-12);
}

TEST(HestonAtm, ForwardBelowSpotAtTheMoney) {
  for (double theta : {0.05, 0.07, 0.1}) {
    HestonParams p = kDiag;
    p.theta = theta;
    const double t = kDiagH.t, tau = kDiagH.tau;
    // first order in eps of sigma(0) = sqrt(v + eps nu0)
    const double diff = (heston_nu({t, tau}, p).nu0 - heston_nu({0.0, tau}, p).nu0) / (2 * std::sqrt(p.v));
    EXPECT_NEAR(diff, -t * (p.xi * p.xi + 4 * p.kappa * (p.v - p.theta)) / (8 * std::sqrt(p.v)), 1e-12);
  }
}

TEST(HestonAtm, VolDerivativesMatchPolynomial) {
  // skew/convexity are d/dk, d2/dk2 of sqrt(variance polynomial) at 0
  const double eps = 1e-6, h = 1e-4;
  auto vol = [&](double k) { return std::sqrt(heston_atm_diag(k, kDiagH, eps, kDiag)); };
  const auto sc = heston_atm_skew_convexity(kDiagH, eps, kDiag);
  EXPECT_NEAR(sc.skew, (vol(h) - vol(-h)) / (2 * h), 1e-5);
  EXPECT_NEAR(sc.convexity, (vol(h) - 2 * vol(0) + vol(-h)) / (h * h), 1e-3);
}

TEST(HestonLMAtm, MatchesGenericAtZero) {
  const auto rc = heston_lm_coeffs(1.0, kLarge);
  const auto atm = heston_lm_atm(1.0, kLarge);
  const auto gen = largemat_smile(rc, 0.0, 5.0);
  EXPECT_NEAR(atm.v0, gen.v0, 1e-8);
  EXPECT_NEAR(atm.v1, gen.v1, 1e-8);
  EXPECT_TRUE(std::isfinite(heston_lm_atm(0.0, kLarge).v1));
}

TEST(HestonLMAtm, SmallStartDateSlope) {
  HestonParams p = kLarge;
  p.rho = 0.0;
  const double slope = 2 * p.theta / (1 + std::sqrt(1 + p.xi * p.xi / (4 * p.kappa * p.kappa))) - p.v;
  const double base = heston_lm_atm(0.0, p).v1;
  for (double t : {0.01, 0.02, 0.05}) {
    const double est = (heston_lm_atm(t, p).v1 - base) / t;
    EXPECT_NEAR(est, slope, 0.1 * std::abs(slope) + 5 * t * std::abs(slope)) << t;
  }
}

TEST(Curve, BlackScholesFlatAgainstOracle) {
  const auto rc = bs_coeffs(0.2, Regime::small_maturity, 1.0);
  SmileRequest req;
  req.epsilon = 0.25;
  const ModelSpec m = BlackScholesModel{0.2};
  const ForwardHorizon h{0.0, 0.25};
  const auto c = smile_from_expansion(rc, linspace(-0.2, 0.2, 9), req, [&](double k) {
    return reference_vol(m, h, k, StrikeConvention::log_strike);
  });
  ASSERT_EQ(c.points.size(), 9u);
  for (const auto& p : c.points) {
    if (p.k == 0.0) {
      EXPECT_TRUE(p.has_flag("singular"));
      continue;
    }
    for (int o = 0; o < 3; ++o) EXPECT_NEAR(p.sigma[o], 0.2, 1e-10);
    EXPECT_LT(p.err[2], 1e-8);
  }
  EXPECT_DOUBLE_EQ(c.horizon.tau, 0.25);
}

TEST(Curve, EmptyGrid) {
  const auto c = smile_from_expansion(bs_coeffs(0.2, Regime::large_maturity), {}, SmileRequest{});
  EXPECT_TRUE(c.points.empty());
  EXPECT_EQ(c.warnings, 0);
}

TEST(Curve, OracleFailureIsFlaggedNotFatal) {
  const auto rc = heston_lm_coeffs(1.0, kLarge);
  SmileRequest req;
  req.tau = 5.0;
  const auto grid = linspace(-0.06, 0.06, 5);
  const auto c = smile_from_expansion(rc, grid, req, [&](double k) -> double {
    if (k == grid[1]) throw ToleranceError(0.0, "synthetic");
    return 0.25;
  });
  EXPECT_EQ(c.warnings, 1);
  EXPECT_TRUE(c.points[1].has_flag("oracle-failed"));
  EXPECT_FALSE(c.points[0].has_flag("oracle-failed"));
}

TEST(Curve, ParallelMatchesSerial) {
  const auto rc = heston_diag_coeffs(kDiagH, kDiag);
  SmileRequest a, b;
  b.jobs = 4;
  const auto g = linspace(-0.05, 0.05, 23);
  const auto x = smile_from_expansion(rc, g, a), y = smile_from_expansion(rc, g, b);
  for (size_t i = 0; i < g.size(); ++i)
    for (int o = 0; o < 3; ++o) {
      if (std::isnan(x.points[i].v[o])) {
        EXPECT_TRUE(std::isnan(y.points[i].v[o]));
      } else {
        EXPECT_EQ(x.points[i].v[o], y.points[i].v[o]);
      }
    }
}

TEST(Curve, NegativeVarianceFlagged) {
  auto rc = bs_coeffs(0.2, Regime::large_maturity);
  SmileRequest req;
  req.tau = 1e-3;  // lets v1/tau dominate once v1 is tampered with
  rc.lambda1 = [](double u) { return -5.0 * u; };
  rc.lambda1_jet = [](double u) {
    Jet4 j(-5.0 * u);
    j.c[1] = -5.0;
    return j;
  };
  const auto c = smile_from_expansion(rc, {0.3}, req);
  bool flagged = false;
  for (const auto& f : c.points[0].flags) flagged = flagged || f.rfind("invalid", 0) == 0;
  EXPECT_TRUE(flagged);
}

TEST(Diagnostics, AtmLimitCombinations) {
  const auto d = atm_limit_diagnostics(bs_coeffs(0.2, Regime::small_maturity, 1.0));
  EXPECT_NEAR(d.c0, 0.0, 1e-15);
  EXPECT_NEAR(d.c1, 0.0, 1e-12);  // 2 (-s^2/2) + s^2
  const auto h = atm_limit_diagnostics(heston_diag_coeffs(kDiagH, kDiag));
  EXPECT_TRUE(std::isfinite(h.c1) && std::isfinite(h.c2));
}

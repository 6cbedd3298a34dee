#pragma once

// Command-line front end: config parsing, table output, figure datasets.
// Entry point run_cli(argc, argv) returns the process exit code.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fwdsmile/errors.hpp"
#include "fwdsmile/expansions.hpp"
#include "fwdsmile/models.hpp"
#include "fwdsmile/oracle.hpp"
#include "fwdsmile/saddle.hpp"
#include "fwdsmile/smile.hpp"

namespace fwdsmile::cli {

using json = nlohmann::json;

enum ExitCode { ok = 0, config_error = 2, unsupported = 3, numerical = 4 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::invalid_parameter: return config_error;
    case ErrorKind::unsupported:
    case ErrorKind::martingale:
    case ErrorKind::regularity: return unsupported;
    default: return numerical;
  }
}

// ---------------------------------------------------------------------------
// Config

struct GridSpec {
  double lo = 0, hi = 0, step = 0;

  std::vector<double> points() const {
    std::vector<double> g;
    const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (long i = 0; i < n; ++i) g.push_back(lo + step * static_cast<double>(i));
    return g;
  }
};

struct OracleSpec {
  bool enabled = false;
  QuadratureConfig quad;
};

struct RunConfig {
  std::string model_name;
  ModelSpec model;
  Regime regime = Regime::small_maturity;
  ForwardHorizon horizon;
  GridSpec grid;
  int order = 2;
  Measure measure = Measure::typeI;
  double epsilon = 1.0;
  std::string out_path;
  std::string format = "csv";
  OracleSpec oracle;
};

[[noreturn]] inline void config_fail(const std::string& msg) { fail(ErrorKind::config, "config: " + msg); }

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) config_fail(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) config_fail("unknown key '" + it.key() + "' in " + where);
}

inline double num(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) config_fail("missing '" + key + "' in " + where);
  if (!j.at(key).is_number()) config_fail("'" + key + "' in " + where + " must be a number");
  return j.at(key).get<double>();
}

inline double num_or(const json& j, const std::string& key, double dflt, const std::string& where) {
  return j.contains(key) ? num(j, key, where) : dflt;
}

inline VarianceGammaParams parse_vg(const json& j, const std::string& where) {
  return {num(j, "C", where), num(j, "G", where), num(j, "M", where)};
}

inline RunConfig parse_config(const json& j) {
  check_keys(j, "config", {"model", "regime", "horizon", "grid", "order", "measure", "epsilon", "output", "oracle"});
  RunConfig c;
  if (!j.contains("model")) config_fail("missing 'model' section");
  const json& m = j.at("model");
  if (!m.is_object() || m.size() != 1)
    config_fail("'model' must hold exactly one of bs, heston, vg, vg+feller, vg+gammaou");
  c.model_name = m.begin().key();
  const json& mp = m.begin().value();
  const std::string where = "model." + c.model_name;
  if (c.model_name == "bs") {
    check_keys(mp, where, {"sigma"});
    c.model = BlackScholesModel{num(mp, "sigma", where)};
  } else if (c.model_name == "heston") {
    check_keys(mp, where, {"v", "theta", "kappa", "xi", "rho"});
    c.model = HestonModel{HestonParams{num(mp, "v", where), num(mp, "theta", where), num(mp, "kappa", where),
                                       num(mp, "xi", where), num(mp, "rho", where)}};
  } else if (c.model_name == "vg") {
    check_keys(mp, where, {"C", "G", "M"});
    c.model = TimeChangedLevyModel{parse_vg(mp, where), TrivialClock{}};
  } else if (c.model_name == "vg+feller") {
    check_keys(mp, where, {"C", "G", "M", "v", "theta", "kappa", "xi"});
    c.model = TimeChangedLevyModel{
        parse_vg(mp, where),
        FellerClockParams{num(mp, "v", where), num(mp, "theta", where), num(mp, "kappa", where), num(mp, "xi", where)}};
  } else if (c.model_name == "vg+gammaou") {
    check_keys(mp, where, {"C", "G", "M", "v", "lambda", "alpha", "delta"});
    c.model = TimeChangedLevyModel{
        parse_vg(mp, where), GammaOUClockParams{num(mp, "v", where), num(mp, "lambda", where),
                                                num(mp, "alpha", where), num(mp, "delta", where)}};
  } else {
    config_fail("unknown model '" + c.model_name + "'");
  }

  const std::string regime = j.value("regime", std::string("small"));
  if (regime == "small")
    c.regime = Regime::small_maturity;
  else if (regime == "large")
    c.regime = Regime::large_maturity;
  else
    config_fail("regime must be 'small' or 'large'");

  if (!j.contains("horizon")) config_fail("missing 'horizon'");
  check_keys(j.at("horizon"), "horizon", {"t", "tau"});
  c.horizon = {num_or(j.at("horizon"), "t", 0.0, "horizon"), num(j.at("horizon"), "tau", "horizon")};

  if (!j.contains("grid")) config_fail("missing 'grid'");
  check_keys(j.at("grid"), "grid", {"lo", "hi", "step"});
  c.grid = {num(j.at("grid"), "lo", "grid"), num(j.at("grid"), "hi", "grid"), num(j.at("grid"), "step", "grid")};
  if (!(c.grid.step > 0)) config_fail("grid.step must be > 0");
  if (!(c.grid.hi >= c.grid.lo)) config_fail("grid is empty (hi < lo)");

  if (j.contains("order")) {
    if (!j.at("order").is_number_integer()) config_fail("order must be 0, 1 or 2");
    c.order = j.at("order").get<int>();
    if (c.order < 0 || c.order > 2) config_fail("order must be 0, 1 or 2");
  }
  const std::string measure = j.value("measure", std::string("typeI"));
  if (measure == "typeI")
    c.measure = Measure::typeI;
  else if (measure == "typeII")
    c.measure = Measure::typeII;
  else
    config_fail("measure must be 'typeI' or 'typeII'");
  if (auto* hm = std::get_if<HestonModel>(&c.model)) hm->measure = c.measure;

  c.epsilon = num_or(j, "epsilon", 1.0, "config");
  if (!(c.epsilon > 0)) config_fail("epsilon must be > 0");

  if (j.contains("output")) {
    check_keys(j.at("output"), "output", {"path", "format"});
    c.out_path = j.at("output").value("path", std::string());
    c.format = j.at("output").value("format", std::string("csv"));
  }
  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    check_keys(o, "oracle", {"enabled", "abs_tol", "rel_tol", "max_depth"});
    c.oracle.enabled = o.value("enabled", false);
    c.oracle.quad.abs_tol = num_or(o, "abs_tol", c.oracle.quad.abs_tol, "oracle");
    c.oracle.quad.rel_tol = num_or(o, "rel_tol", c.oracle.quad.rel_tol, "oracle");
    c.oracle.quad.max_depth = static_cast<int>(num_or(o, "max_depth", c.oracle.quad.max_depth, "oracle"));
    try {
      c.oracle.quad.validate();
    } catch (const Error& e) {
      config_fail(e.what());
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_fail(std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    config_fail(e.what());
  }
}

// ---------------------------------------------------------------------------
// Model / regime wiring

inline RegimeCoefficients build_coefficients(const RunConfig& c) {
  validate_model(c.model);
  c.horizon.validate();
  if (const auto* bs = std::get_if<BlackScholesModel>(&c.model))
    return bs_coeffs(bs->sigma, c.regime, c.horizon.tau);
  if (const auto* hm = std::get_if<HestonModel>(&c.model)) {
    if (c.regime == Regime::small_maturity) return heston_diag_coeffs(c.horizon, hm->p, hm->measure);
    hm->p.validate_large_maturity();
    return heston_lm_coeffs(c.horizon.t, hm->p, hm->measure);
  }
  if (c.measure == Measure::typeII)
    fail(ErrorKind::unsupported, "Type-II forward smile is only available for Heston");
  const auto& tc = std::get<TimeChangedLevyModel>(c.model);
  if (c.regime == Regime::small_maturity)
    fail(ErrorKind::unsupported,
         "small-maturity expansion is not available for Levy models (Lambda0'(0) != 0 and no diagonal coefficients)");
  return tclevy_lm_coeffs(c.horizon.t, tc.levy, tc.clock);
}

inline ReferenceVol make_reference(const RunConfig& c) {
  if (c.regime == Regime::small_maturity) {
    const ForwardHorizon h{c.epsilon * c.horizon.t, c.epsilon * c.horizon.tau};
    return [m = c.model, h, q = c.oracle.quad](double k) {
      return reference_vol(m, h, k, StrikeConvention::log_strike, q);
    };
  }
  return [m = c.model, h = c.horizon, q = c.oracle.quad](double k) {
    return reference_vol(m, h, k, StrikeConvention::scaled, q);
  };
}

inline SmileCurve compute_curve(const RunConfig& c, bool with_oracle, int jobs) {
  const auto rc = build_coefficients(c);
  SmileRequest req;
  req.epsilon = c.epsilon;
  req.tau = c.horizon.tau;
  req.order = c.order;
  req.jobs = jobs;
  return smile_from_expansion(rc, c.grid.points(), req, with_oracle ? make_reference(c) : ReferenceVol{});
}

// ---------------------------------------------------------------------------
// Output

// Shortest round-trip decimal; "nan" for missing values.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string join_flags(const std::vector<std::string>& f) {
  std::string s;
  for (size_t i = 0; i < f.size(); ++i) s += (i ? ";" : "") + f[i];
  return s;
}

inline bool curve_has_reference(const SmileCurve& c) {
  for (const auto& p : c.points)
    if (p.sigma_ref || p.has_flag("oracle-failed")) return true;
  return false;
}

inline std::string curve_csv(const SmileCurve& c, const std::string& prefix_header = "",
                             const std::string& prefix = "", bool header = true) {
  const bool ref = curve_has_reference(c);
  std::ostringstream os;
  if (header) {
    os << prefix_header << "k,strike,v0,v1,v2,sigma0,sigma1,sigma2";
    if (ref) os << ",sigma_ref,err0,err1,err2";
    os << ",flags\n";
  }
  for (const auto& p : c.points) {
    os << prefix << fmt(p.k) << ',' << fmt(p.strike);
    for (double v : p.v) os << ',' << fmt(v);
    for (double s : p.sigma) os << ',' << fmt(s);
    if (ref) {
      os << ',' << fmt(p.sigma_ref.value_or(kNaN));
      for (double e : p.err) os << ',' << fmt(e);
    }
    os << ',' << join_flags(p.flags) << '\n';
  }
  return os.str();
}

inline json num_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double json_num(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

inline json curve_json(const SmileCurve& c) {
  json j;
  j["regime"] = c.regime == Regime::small_maturity ? "small" : "large";
  j["horizon"] = {{"t", c.horizon.t}, {"tau", c.horizon.tau}};
  j["epsilon"] = c.epsilon;
  j["order"] = c.order;
  json pts = json::array();
  for (const auto& p : c.points) {
    json q;
    q["k"] = p.k;
    q["strike"] = p.strike;
    for (int i = 0; i < 3; ++i) {
      q["v" + std::to_string(i)] = num_json(p.v[i]);
      q["sigma" + std::to_string(i)] = num_json(p.sigma[i]);
    }
    if (p.sigma_ref) {
      q["sigma_ref"] = num_json(*p.sigma_ref);
      for (int i = 0; i < 3; ++i) q["err" + std::to_string(i)] = num_json(p.err[i]);
    }
    q["flags"] = p.flags;
    pts.push_back(q);
  }
  j["points"] = pts;
  return j;
}

inline SmileCurve curve_from_json(const json& j) {
  SmileCurve c;
  c.regime = j.at("regime").get<std::string>() == "small" ? Regime::small_maturity : Regime::large_maturity;
  c.horizon = {j.at("horizon").at("t").get<double>(), j.at("horizon").at("tau").get<double>()};
  c.epsilon = j.at("epsilon").get<double>();
  c.order = j.at("order").get<int>();
  for (const auto& q : j.at("points")) {
    SmilePoint p;
    p.k = q.at("k").get<double>();
    p.strike = q.at("strike").get<double>();
    for (int i = 0; i < 3; ++i) {
      p.v[i] = json_num(q.at("v" + std::to_string(i)));
      p.sigma[i] = json_num(q.at("sigma" + std::to_string(i)));
    }
    if (q.contains("sigma_ref")) {
      p.sigma_ref = json_num(q.at("sigma_ref"));
      for (int i = 0; i < 3; ++i) p.err[i] = json_num(q.at("err" + std::to_string(i)));
    }
    p.flags = q.at("flags").get<std::vector<std::string>>();
    c.points.push_back(p);
  }
  return c;
}

struct ErrorSummary {
  double sup[3] = {0, 0, 0};
  double mean[3] = {0, 0, 0};
  int n = 0;
};

// Points carrying any flag are left out.
inline ErrorSummary summarize(const SmileCurve& c) {
  ErrorSummary s;
  for (const auto& p : c.points) {
    if (!p.flags.empty() || !p.sigma_ref) continue;
    bool finite = true;
    for (double e : p.err) finite = finite && std::isfinite(e);
    if (!finite) continue;
    for (int i = 0; i < 3; ++i) {
      s.sup[i] = std::max(s.sup[i], p.err[i]);
      s.mean[i] += p.err[i];
    }
    ++s.n;
  }
  if (s.n)
    for (double& m : s.mean) m /= s.n;
  return s;
}

inline std::string summary_text(const ErrorSummary& s) {
  std::ostringstream os;
  for (int i = 0; i < 3; ++i)
    os << "order " << i << ": sup_err=" << fmt(s.sup[i]) << " mean_err=" << fmt(s.mean[i]) << " n=" << s.n << '\n';
  return os.str();
}

// Whole content is produced before the file is opened, so failures leave no partial output.
inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::config, "cannot write '" + path + "'");
  f << content;
}

// ---------------------------------------------------------------------------
// Commands

inline std::string domain_report(const RunConfig& c, const std::string& format) {
  json r;
  r["model"] = c.model_name;
  r["regime"] = c.regime == Regime::small_maturity ? "small" : "large";
  auto kind = [](BoundKind k) {
    return k == BoundKind::open ? "open" : (k == BoundKind::closed ? "closed" : "infinite");
  };
  if (const auto* hm = std::get_if<HestonModel>(&c.model); hm && c.regime == Regime::large_maturity) {
    const auto rep = heston_lm_domain(c.horizon.t, hm->p);
    r["rho_minus"] = rep.rho_minus;
    r["rho_plus"] = rep.rho_plus;
    r["eta"] = rep.eta;
    r["u_minus"] = rep.u_minus;
    r["u_plus"] = rep.u_plus;
    r["u_star_minus"] = rep.u_star_minus ? json(*rep.u_star_minus) : json(nullptr);
    r["u_star_plus"] = rep.u_star_plus ? json(*rep.u_star_plus) : json(nullptr);
    r["case"] = to_string(rep.lm_case);
    r["interval"] = {{"lo", rep.interval.lo}, {"hi", rep.interval.hi},
                     {"lo_kind", kind(rep.interval.lo_kind)}, {"hi_kind", kind(rep.interval.hi_kind)}};
  }
  if (const auto* tc = std::get_if<TimeChangedLevyModel>(&c.model)) {
    const auto [lo, hi] = levy_domain(tc->levy);
    r["exponent_domain"] = {{"lo", lo}, {"hi", hi}};
  }
  bool have_coeffs = true;
  if (const auto* hm = std::get_if<HestonModel>(&c.model); hm && c.regime == Regime::large_maturity)
    have_coeffs = heston_lm_domain(c.horizon.t, hm->p).lm_case == HestonLMCase::III;
  if (have_coeffs) {
    const auto rc = build_coefficients(c);
    r["domain"] = {{"lo", num_json(rc.domain.lo)}, {"hi", num_json(rc.domain.hi)},
                   {"lo_kind", kind(rc.domain.lo_kind)}, {"hi_kind", kind(rc.domain.hi_kind)}};
    r["singular_strikes"] = {rc.singular_lo, rc.singular_c};
  }
  if (format == "json") return r.dump(2) + "\n";
  std::ostringstream os;
  for (auto it = r.begin(); it != r.end(); ++it) {
    os << it.key() << ": ";
    if (it->is_number_float())
      os << fmt(it->get<double>());
    else if (it->is_string())
      os << it->get<std::string>();
    else
      os << it->dump();
    os << '\n';
  }
  return os.str();
}

struct FigurePanel {
  std::string file;
  std::string content;
};

inline RunConfig heston_config(HestonParams p, Regime regime, ForwardHorizon h, GridSpec g,
                               Measure m = Measure::typeI) {
  RunConfig c;
  c.model_name = "heston";
  c.model = HestonModel{p, m};
  c.measure = m;
  c.regime = regime;
  c.horizon = h;
  c.grid = g;
  c.order = 2;
  c.oracle.enabled = true;
  return c;
}

inline GridSpec strike_grid(double K_lo, double K_hi, double scale, double step) {
  return {std::log(K_lo) / scale, std::log(K_hi) / scale, step};
}

inline std::string error_panel(const SmileCurve& c) {
  std::ostringstream os;
  os << "k,strike,err0,err1,err2,flags\n";
  for (const auto& p : c.points)
    os << fmt(p.k) << ',' << fmt(p.strike) << ',' << fmt(p.err[0]) << ',' << fmt(p.err[1]) << ','
       << fmt(p.err[2]) << ',' << join_flags(p.flags) << '\n';
  return os.str();
}

inline std::vector<FigurePanel> figure_panels(const std::string& name, int jobs) {
  std::vector<FigurePanel> out;
  auto comparison = [&](const RunConfig& c) {
    const auto curve = compute_curve(c, true, jobs);
    out.push_back({name + "-smile.csv", curve_csv(curve)});
    out.push_back({name + "-errors.csv", error_panel(curve)});
  };
  if (name == "hest-diag") {
    comparison(heston_config({0.07, 0.07, 1.0, 0.34, -0.8}, Regime::small_maturity, {0.5, 1.0 / 12},
                             strike_grid(0.95, 1.05, 1.0, 0.0025)));
  } else if (name == "hest-large") {
    comparison(heston_config({0.07, 0.07, 1.5, 0.34, -0.25}, Regime::large_maturity, {1.0, 5.0},
                             strike_grid(0.7, 1.5, 5.0, 0.0025)));
  } else if (name == "gou-large") {
    RunConfig c;
    c.model_name = "vg+gammaou";
    c.model = TimeChangedLevyModel{VarianceGammaParams{6.5, 11.1, 33.4}, GammaOUClockParams{1.0, 1.8, 0.6, 0.6}};
    c.regime = Regime::large_maturity;
    c.horizon = {1.0, 3.0};
    c.grid = strike_grid(0.7, 1.5, 3.0, 0.004);
    c.oracle.enabled = true;
    comparison(c);
  } else if (name == "fwd-vs-spot") {
    std::string body;
    bool first = true;
    for (double theta : {0.07, 0.1})
      for (double t : {0.0, 0.5}) {
        const auto c = heston_config({0.07, theta, 1.0, 0.3, -0.6}, Regime::small_maturity, {t, 1.0 / 12},
                                     strike_grid(0.9, 1.1, 1.0, 0.0025));
        const auto curve = compute_curve(c, false, jobs);
        const std::string pre = fmt(theta) + ',' + fmt(t) + ',' + fmt(1.0 / 12) + ',';
        body += curve_csv(curve, "theta,t,tau,", pre, first);
        first = false;
      }
    out.push_back({name + ".csv", body});
  } else if (name == "explosion") {
    std::string body;
    bool first = true;
    for (double tau : {1.0 / 6, 1.0 / 12, 1.0 / 16, 1.0 / 32}) {
      const auto c = heston_config({0.07, 0.07, 1.0, 0.5, -0.6}, Regime::small_maturity, {0.5, tau},
                                   strike_grid(0.8, 1.2, 1.0, 0.005));
      const auto curve = compute_curve(c, false, jobs);
      body += curve_csv(curve, "t,tau,", fmt(0.5) + ',' + fmt(tau) + ',', first);
      first = false;
    }
    out.push_back({name + "-a.csv", body});
    // Type I vs Type II from the ATM polynomials
    const HestonParams p{0.07, 0.07, 1.0, 0.34, -0.2};
    const ForwardHorizon h{0.5, 1.0 / 12};
    std::ostringstream os;
    os << "k,strike,sigma_typeI,sigma_typeII\n";
    for (double k : strike_grid(0.8, 1.2, 1.0, 0.005).points()) {
      const double a = heston_atm_diag(k, h, 1.0, p, Measure::typeI);
      const double b = heston_atm_diag(k, h, 1.0, p, Measure::typeII);
      os << fmt(k) << ',' << fmt(std::exp(k)) << ',' << fmt(a > 0 ? std::sqrt(a) : kNaN) << ','
         << fmt(b > 0 ? std::sqrt(b) : kNaN) << '\n';
    }
    out.push_back({name + "-b.csv", os.str()});
  } else {
    fail(ErrorKind::config, "unknown figure '" + name +
                                "' (known: hest-diag, hest-large, gou-large, fwd-vs-spot, explosion)");
  }
  return out;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Forward-start option and forward smile asymptotics"};
  app.require_subcommand(1);
  std::string config_path, out_path, format, figure_name;
  int jobs = 1;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", config_path, "JSON run configuration")->required();
    s->add_option("--out", out_path, "output file (default: config output.path or stdout)");
    s->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--jobs", jobs, "worker threads over strikes")->check(CLI::PositiveNumber);
  };
  auto* smile = app.add_subcommand("smile", "expansion smile over the strike grid");
  auto* compare = app.add_subcommand("compare", "expansion vs Fourier reference");
  auto* domain = app.add_subcommand("domain", "lmgf domain and singular strikes");
  auto* figure = app.add_subcommand("figure", "write a figure dataset");
  add_common(smile);
  add_common(compare);
  add_common(domain);
  figure->add_option("name", figure_name, "hest-diag | hest-large | gou-large | fwd-vs-spot | explosion")->required();
  figure->add_option("--out", out_path, "output directory (default: .)");
  figure->add_option("--jobs", jobs, "worker threads over strikes")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? ok : config_error;
  }

  try {
    if (*figure) {
      const auto panels = figure_panels(figure_name, jobs);
      const std::filesystem::path dir = out_path.empty() ? "." : out_path;
      std::filesystem::create_directories(dir);
      for (const auto& p : panels) {
        emit((dir / p.file).string(), p.content, out);
        out << (dir / p.file).string() << '\n';
      }
      return ok;
    }
    RunConfig c = load_config(config_path);
    if (!format.empty()) c.format = format;
    if (c.format != "csv" && c.format != "json") config_fail("output.format must be csv or json");
    const std::string path = out_path.empty() ? c.out_path : out_path;

    if (*domain) {
      emit(path, domain_report(c, c.format), out);
      return ok;
    }
    const bool with_oracle = *compare || c.oracle.enabled;
    const auto curve = compute_curve(c, with_oracle, jobs);
    std::string content;
    const ErrorSummary s = summarize(curve);
    if (c.format == "json") {
      json j = curve_json(curve);
      if (*compare)
        j["summary"] = {{"sup_err", {s.sup[0], s.sup[1], s.sup[2]}},
                        {"mean_err", {s.mean[0], s.mean[1], s.mean[2]}},
                        {"n", s.n},
                        {"warnings", curve.warnings}};
      content = j.dump(2) + "\n";
    } else {
      content = curve_csv(curve);
    }
    emit(path, content, out);
    if (*compare) {
      std::ostream& so = (path.empty() || path == "-") ? err : out;
      so << summary_text(s);
    }
    if (curve.warnings) err << "warning: oracle failed at " << curve.warnings << " strike(s)\n";
    return ok;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return numerical;
  }
}

}  // namespace fwdsmile::cli

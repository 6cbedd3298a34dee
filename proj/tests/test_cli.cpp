#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fwdsmile/cli.hpp"

namespace fs = std::filesystem;
using namespace fwdsmile;
using json = nlohmann::json;

namespace {

fs::path scratch() {
  const auto d = fs::temp_directory_path() / ("fwdsmile_cli_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

fs::path write(const std::string& name, const std::string& body) {
  const auto p = scratch() / name;
  std::ofstream(p) << body;
  return p;
}

struct Run {
  int code;
  std::string out;
};

// stdout only; stderr goes to a file next to the configs
Run run(const std::string& args) {
  const std::string cmd = std::string(FWDSMILE_BIN) + " " + args + " 2>" + (scratch() / "stderr.txt").string();
  FILE* pipe = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string last_stderr() {
  std::ifstream in(scratch() / "stderr.txt");
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

json fig4(double rho, double t = 1.0) {
  return {{"model", {{"heston", {{"v", 0.07}, {"theta", 0.07}, {"kappa", 1.5}, {"xi", 0.34}, {"rho", rho}}}}},
          {"regime", "large"},
          {"horizon", {{"t", t}, {"tau", 5.0}}},
          {"grid", {{"lo", -0.06}, {"hi", 0.08}, {"step", 0.01}}}};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& s) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> r;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(cell);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST(Cli, BlackScholesColumnsFlat) {
  const json cfg = {{"model", {{"bs", {{"sigma", 0.2}}}}},
                    {"regime", "large"},
                    {"horizon", {{"t", 0.5}, {"tau", 10.0}}},
                    {"grid", {{"lo", -0.3}, {"hi", 0.3}, {"step", 0.05}}}};
  const auto r = run("smile --config " + write("bs.json", cfg.dump()).string());
  ASSERT_EQ(r.code, 0) << last_stderr();
  const auto rows = csv_rows(r.out);
  ASSERT_GT(rows.size(), 10u);
  const auto& head = rows[0];
  for (size_t i = 1; i < rows.size(); ++i)
    for (size_t c = 0; c < head.size(); ++c)
      if (head[c].rfind("sigma", 0) == 0) EXPECT_NEAR(std::stod(rows[i][c]), 0.2, 1e-10) << r.out;
}

TEST(Cli, MalformedJsonIsConfigError) {
  const auto out = scratch() / "never.csv";
  fs::remove(out);
  const auto r = run("smile --config " + write("bad.json", "{\"model\": ").string() + " --out " + out.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, UnknownKeyIsConfigError) {
  json cfg = fig4(-0.25);
  cfg["grid"]["stpe"] = 0.01;
  EXPECT_EQ(run("smile --config " + write("typo.json", cfg.dump()).string()).code, 2);
  EXPECT_NE(last_stderr().find("stpe"), std::string::npos);
  EXPECT_EQ(run("smile").code, 2);
}

TEST(Cli, CaseIUnsupported) {
  const auto r = run("smile --config " + write("case1.json", fig4(-0.9).dump()).string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(last_stderr().find("Case I"), std::string::npos);
}

TEST(Cli, CaseIIUnsupported) {
  // rho above rho+ for these parameters
  const auto rep = heston_lm_domain(1.0, HestonParams{0.07, 0.07, 1.5, 0.34, 0.0});
  ASSERT_LT(rep.rho_plus, 0.99);
  const auto r = run("smile --config " + write("case2.json", fig4(0.5 * (rep.rho_plus + 1)).dump()).string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(last_stderr().find("Case II"), std::string::npos);
}

TEST(Cli, KappaBelowRhoXiRejected) {
  json cfg = fig4(0.7);
  cfg["model"]["heston"]["kappa"] = 0.2;
  EXPECT_EQ(run("smile --config " + write("kappa.json", cfg.dump()).string()).code, 3);
  EXPECT_NE(last_stderr().find("rho*xi"), std::string::npos);
}

TEST(Cli, JobsDoNotChangeOutput) {
  const auto cfg = write("det.json", fig4(-0.25).dump()).string();
  const auto a = run("compare --config " + cfg + " --jobs 1");
  const auto b = run("compare --config " + cfg + " --jobs 4");
  ASSERT_EQ(a.code, 0) << last_stderr();
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, JsonRoundTrip) {
  cli::RunConfig c = cli::parse_config(fig4(-0.25));
  const auto curve = cli::compute_curve(c, true, 2);
  const auto back = cli::curve_from_json(json::parse(cli::curve_json(curve).dump()));
  ASSERT_EQ(back.points.size(), curve.points.size());
  for (size_t i = 0; i < curve.points.size(); ++i) {
    const auto &p = curve.points[i], &q = back.points[i];
    EXPECT_EQ(p.k, q.k);
    for (int o = 0; o < 3; ++o) {
      if (std::isnan(p.sigma[o])) {
        EXPECT_TRUE(std::isnan(q.sigma[o]));
      } else {
        EXPECT_EQ(p.sigma[o], q.sigma[o]);
      }
    }
    ASSERT_TRUE(q.sigma_ref.has_value());
    EXPECT_EQ(*p.sigma_ref, *q.sigma_ref);
    EXPECT_EQ(p.flags, q.flags);
  }
}

TEST(Cli, CompareJsonSummary) {
  const auto r = run("compare --format json --config " + write("cmp.json", fig4(-0.25).dump()).string());
  ASSERT_EQ(r.code, 0) << last_stderr();
  const auto j = json::parse(r.out);
  ASSERT_TRUE(j.contains("summary"));
  const auto sup = j["summary"]["sup_err"];
  EXPECT_LT(sup[2].get<double>(), sup[0].get<double>());
  EXPECT_GT(j["summary"]["n"].get<int>(), 5);
}

TEST(Cli, DomainReports) {
  auto r = run("domain --format json --config " + write("d4.json", fig4(-0.25).dump()).string());
  ASSERT_EQ(r.code, 0) << last_stderr();
  auto j = json::parse(r.out);
  EXPECT_TRUE(j.contains("rho_minus"));
  EXPECT_EQ(j["case"], "III");

  r = run("domain --format json --config " + write("d0.json", fig4(-0.25, 0.0).dump()).string());
  j = json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["rho_minus"].get<double>(), -1.0);
  EXPECT_DOUBLE_EQ(j["rho_plus"].get<double>(), 1.0);

  const json vg = {{"model", {{"vg", {{"C", 6.5}, {"G", 11.1}, {"M", 33.4}}}}},
                   {"regime", "large"},
                   {"horizon", {{"t", 1.0}, {"tau", 3.0}}},
                   {"grid", {{"lo", -0.1}, {"hi", 0.1}, {"step", 0.05}}}};
  r = run("domain --format json --config " + write("dvg.json", vg.dump()).string());
  ASSERT_EQ(r.code, 0) << last_stderr();
  j = json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["exponent_domain"]["lo"].get<double>(), -11.1);
  EXPECT_DOUBLE_EQ(j["exponent_domain"]["hi"].get<double>(), 33.4);
  EXPECT_NE(run("domain --config " + write("d4t.json", fig4(-0.25).dump()).string()).out.find("rho"), std::string::npos);
}

TEST(Cli, SmallMaturityLevyUnsupported) {
  const json vg = {{"model", {{"vg", {{"C", 6.5}, {"G", 11.1}, {"M", 33.4}}}}},
                   {"regime", "small"},
                   {"horizon", {{"t", 1.0}, {"tau", 3.0}}},
                   {"grid", {{"lo", -0.1}, {"hi", 0.1}, {"step", 0.05}}}};
  EXPECT_EQ(run("smile --config " + write("vgs.json", vg.dump()).string()).code, 3);
}

TEST(Cli, Figures) {
  EXPECT_EQ(run("figure nosuch --out " + (scratch() / "figs").string()).code, 2);
  const auto dir = scratch() / "figs";
  const auto r = run("figure hest-diag --jobs 4 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << last_stderr();
  EXPECT_TRUE(fs::exists(dir / "hest-diag-smile.csv"));
  EXPECT_TRUE(fs::exists(dir / "hest-diag-errors.csv"));
  EXPECT_GT(csv_rows(slurp(dir / "hest-diag-smile.csv")).size(), 30u);
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "imgsdrp/scenario.hpp"

using namespace imgsdrp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(IMGSDRP_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("imgsdrp_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ScenarioConfig short_run() {
  ScenarioConfig c;
  c.duration = 30;
  return c;
}

}  // namespace

TEST(RunScenario, DeterministicRow) {
  std::ostringstream a, b;
  write_row(a, run_scenario(short_run()));
  write_row(b, run_scenario(short_run()));
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunScenario, FifteenThousandPacketsAtDefaults) {
  ScenarioConfig c;
  const auto r = run_scenario(c);
  EXPECT_EQ(r.stats.data_generated, 15000u);
  EXPECT_TRUE(r.stats.conserved());
}

TEST(RunScenario, NoGatewaysReportsAbsentMetrics) {
  auto c = short_run();
  c.vgc_count = 0;
  const auto r = run_scenario(c);
  EXPECT_EQ(r.stats.data_delivered, 0u);
  EXPECT_DOUBLE_EQ(*r.metrics.pdr, 0.0);
  EXPECT_FALSE(r.metrics.overhead);
  std::ostringstream os;
  write_row(os, r);
  EXPECT_NE(os.str().find(",0,NA,NA,"), std::string::npos);
}

TEST(RunScenario, ZeroSourcesGeneratesNothing) {
  auto c = short_run();
  c.sources = 0;
  const auto r = run_scenario(c);
  EXPECT_EQ(r.stats.data_generated, 0u);
  EXPECT_FALSE(r.metrics.pdr);
}

TEST(RunScenario, TooManySources) {
  auto c = short_run();
  c.vehicles = 3;
  c.vgc_count = 1;
  EXPECT_THROW(run_scenario(c), ConfigError);
}

TEST(RunScenario, ImportedTrace) {
  const auto dir = scratch("trace");
  auto c = short_run();
  c.vehicles = 12;
  c.vgc_count = 4;
  c.sources = 2;
  {
    std::ofstream f(dir / "t.csv");
    write_trace(f, generate_highway(c, 3));
  }
  c.trace_path = (dir / "t.csv").string();
  const auto r = run_scenario(c);
  EXPECT_GT(r.stats.data_generated, 0u);
  EXPECT_TRUE(r.stats.conserved());
}

TEST(Sweep, Cardinality) {
  auto c = short_run();
  c.duration = 10;
  const auto r = sweep(c, SweepAxis::Vgc, {Variant::ETR, Variant::MTR}, {1, 2, 3, 4, 5});
  std::ostringstream os;
  write_results(os, r);
  int rows = 0, means = 0;
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, csv_header());
  while (std::getline(in, line)) {
    ++rows;
    means += line.find(",mean,") != std::string::npos;
  }
  EXPECT_EQ(rows, 60);
  EXPECT_EQ(means, 10);
  EXPECT_THROW(sweep(c, SweepAxis::Vgc, {Variant::ETR}, {}), ConfigError);
}

TEST(Sweep, RangePlotHasFiveXValuesPerVariant) {
  auto c = short_run();
  c.duration = 10;
  const auto r = sweep(c, SweepAxis::Range, {Variant::ETR, Variant::MTR}, {1});
  std::ostringstream os;
  write_plot(os, r, PlotMetric::Pdr);
  int etr = 0, mtr = 0;
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,variant,mean,min,max");
  while (std::getline(in, line)) {
    etr += line.find(",ETR,") != std::string::npos;
    mtr += line.find(",MTR,") != std::string::npos;
  }
  EXPECT_EQ(etr, 5);
  EXPECT_EQ(mtr, 5);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli("explain"), 0);
  EXPECT_EQ(run_cli("explain --set bogus=1"), 2);
  EXPECT_EQ(run_cli("explain --config /nonexistent.conf"), 2);
  {
    std::ofstream f(dir / "bad.conf");
    f << "[radio]\nrange = -5\n";
  }
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.conf").string()), 2);
  EXPECT_EQ(run_cli("sweep --seeds '' --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("run --variant xyz"), 2);
}

TEST(Cli, RunAndSweepFilesAreReproducible) {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  const std::string common = "sweep --axis range --seeds 1 --set duration=5 --out ";
  ASSERT_EQ(run_cli(common + a.string()), 0);
  ASSERT_EQ(run_cli(common + b.string()), 0);
  for (const char* f : {"results.csv", "plot_pdr.csv", "plot_delay.csv", "plot_overhead.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  ASSERT_EQ(run_cli("run --seed 4 --set duration=5 --out " + (a / "one.csv").string()), 0);
  ASSERT_EQ(run_cli("run --seed 4 --set duration=5 --out " + (b / "one.csv").string()), 0);
  EXPECT_EQ(slurp(a / "one.csv"), slurp(b / "one.csv"));
}

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "stochint/scenario.hpp"

using namespace stochint;

namespace {

ScenarioConfig config(const json& raw) {
  ConfigResult r = resolve_config(raw);
  if (!r.ok()) throw std::runtime_error(r.errors.front());
  return *r.config;
}

std::string run_with_workers(const ScenarioConfig& cfg, unsigned workers) {
  set_worker_count(workers);
  const RunReport rep = run_scenario(cfg);
  set_worker_count(1);
  return report_csv(rep.rows, false);
}

}  // namespace

TEST(Scenario, ReportIsIndependentOfWorkerCount) {
  for (const json& raw : {json{{"scenario", "fubini"}, {"paths", 300}, {"seed", 4}, {"level", 7}},
                          json{{"scenario", "quasi_norm"}, {"paths", 2000}, {"seed", 5}},
                          json::parse(R"({"scenario": "spde_baseline", "paths": 200, "seed": 6, "level": 6,
                                          "driver": {"grid_size": 64}, "export": false})")}) {
    const ScenarioConfig cfg = config(raw);
    const std::string one = run_with_workers(cfg, 1);
    EXPECT_EQ(one, run_with_workers(cfg, 2)) << cfg.scenario;
    EXPECT_EQ(one, run_with_workers(cfg, 3)) << cfg.scenario;
  }
}

TEST(Scenario, SeedChangesTheReport) {
  const std::string a = report_csv(run_scenario(config(json{{"scenario", "fubini"}, {"paths", 200}, {"seed", 1}, {"level", 6}})).rows, false);
  const std::string b = report_csv(run_scenario(config(json{{"scenario", "fubini"}, {"paths", 200}, {"seed", 2}, {"level", 6}})).rows, false);
  EXPECT_NE(a, b);
}

TEST(Scenario, RowsAreCanonicallyOrdered) {
  const RunReport rep = run_scenario(config(json{{"scenario", "parts"}, {"paths", 200}}));
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    EXPECT_TRUE(a.check_id < b.check_id || (a.check_id == b.check_id && a.level <= b.level));
  }
  EXPECT_EQ(rep.overall, Verdict::pass);
  EXPECT_EQ(rep.exit_code(), 0);
}

TEST(Scenario, TightToleranceFails) {
  const RunReport rep = run_scenario(config(json{{"scenario", "triangle"}, {"paths", 200}, {"level", 6}, {"tolerance", 1e-9}}));
  EXPECT_EQ(rep.overall, Verdict::fail);
  EXPECT_EQ(rep.exit_code(), 1);
}

TEST(Scenario, ZeroDataGivesZeroResiduals) {
  const RunReport rep = run_scenario(config(json::parse(
      R"({"scenario": "spde_baseline", "paths": 200, "level": 6, "forcing": "zero", "initial": "zero", "export": false})")));
  EXPECT_EQ(rep.overall, Verdict::pass);
  for (const auto& r : rep.rows) {
    if (r.check_id == "weak_residual") {
      EXPECT_EQ(r.value, 0.0);
    }
  }
}

TEST(Scenario, WritesReportFilesAndArtifacts) {
  const auto dir = std::filesystem::temp_directory_path() / "stochint_scenario_test";
  std::filesystem::remove_all(dir);
  const RunReport rep = run_scenario(config(json::parse(
      R"({"scenario": "spde_baseline", "paths": 200, "level": 6, "driver": {"grid_size": 64}})")));
  EXPECT_EQ(std::count_if(rep.rows.begin(), rep.rows.end(), [](const ReportRow& r) { return r.check_id == "weak_residual"; }), 3);
  EXPECT_EQ(rep.exit_code(), 0);
  write_report(rep, dir);
  EXPECT_EQ(read_file(dir / "report.csv").substr(0, kReportHeader.size()), kReportHeader);
  EXPECT_TRUE(std::filesystem::exists(dir / "verdicts.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "solution.csv"));
  const EnsembleDump d = decode_dump(read_file(dir / "solution.bin"));
  EXPECT_EQ(d.paths, 200u);
  std::filesystem::remove_all(dir);
}

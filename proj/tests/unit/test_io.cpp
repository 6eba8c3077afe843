#include <gtest/gtest.h>

#include <cmath>

#include "stochint/fd_oracle.hpp"
#include "stochint/io.hpp"

using namespace stochint;

TEST(Report, HeaderIsBitExact) {
  EXPECT_EQ(report_csv({}), "scenario,check_id,paper_anchor,level,metric,value,tolerance,verdict,runtime_ms\n");
}

TEST(Report, RowsAreQuotedAndFormatted) {
  std::vector<ReportRow> rows{{"s", "b", "an, anchor", 2, "say \"hi\"", 0.1, 1e-3, Verdict::fail, 12.5},
                              {"s", "a", "x", 8, "m", 1.0 / 3.0, 0.02, Verdict::pass, 1.0}};
  sort_rows(rows);
  EXPECT_EQ(report_csv(rows),
            "scenario,check_id,paper_anchor,level,metric,value,tolerance,verdict,runtime_ms\n"
            "s,a,x,8,m,0.333333333333,0.02,pass,1\n"
            "s,b,\"an, anchor\",2,\"say \"\"hi\"\"\",0.1,0.001,fail,12.5\n");
  EXPECT_EQ(report_csv(rows, false).find("12.5"), std::string::npos);
}

TEST(Report, SortIsStableWithinCheckAndLevel) {
  std::vector<ReportRow> rows{{"s", "c", "", 1, "first", 0, 0, Verdict::pass, 0},
                              {"s", "c", "", 0, "zero", 0, 0, Verdict::pass, 0},
                              {"s", "c", "", 1, "second", 0, 0, Verdict::pass, 0}};
  sort_rows(rows);
  EXPECT_EQ(rows[0].metric, "zero");
  EXPECT_EQ(rows[1].metric, "first");
  EXPECT_EQ(rows[2].metric, "second");
}

TEST(Report, VerdictPrecedence) {
  std::vector<ReportRow> rows{{"s", "a", "", 0, "", 0, 0, Verdict::pass, 0}};
  EXPECT_EQ(combine(rows), Verdict::pass);
  rows.push_back({"s", "b", "", 0, "", 0, 0, Verdict::inconclusive, 0});
  EXPECT_EQ(combine(rows), Verdict::inconclusive);
  rows.push_back({"s", "a", "", 1, "", 0, 0, Verdict::fail, 0});
  EXPECT_EQ(combine(rows), Verdict::fail);
  EXPECT_EQ(verdicts_csv(rows), "scenario,check_id,verdict\ns,a,fail\ns,b,inconclusive\ns,overall,fail\n");
}

TEST(Dump, RoundTripsAMildSolution) {
  const ProbSpace space(5, 3);
  ProblemData data;
  data.initial.push_back({space.generate(1, [](Stream& s) { return s.normal(); }),
                          [](const Point& x) { return std::exp(-x[0] * x[0]); }});
  const GridSpec grid = GridSpec::with_spacing(1, -1.0, 1.0, 0.5);
  const std::vector<double> times{0.25, 0.5};
  const std::vector<double> gate_times{0.1};
  const auto vop = validate_kernel(EllipticOperator::heat(), gate_times).validated;
  ASSERT_TRUE(vop);
  const FieldSolution sol = mild_solution(*vop, data, grid, times, 4);

  const std::string buf = encode_dump(sol);
  EXPECT_EQ(buf.substr(0, 4), "SIFS");
  EXPECT_EQ(buf.size(), 4 + 4 + 4 + 3 * 8 + 3 * 8 + 2 * 8 + 2 * 5 * 5 * 8u);
  const EnsembleDump d = decode_dump(buf);
  EXPECT_TRUE(d.grid == grid);
  EXPECT_EQ(d.times, times);
  EXPECT_EQ(d.paths, 5u);
  ASSERT_EQ(d.values.size(), sol.raw_values().size());
  for (std::size_t i = 0; i < d.values.size(); ++i) ASSERT_EQ(d.values[i], sol.raw_values()[i]);
  // [time][node][path]
  EXPECT_EQ(d.values[(1 * 5 + 3) * 5 + 2], sol.samples(1, 3)[2]);

  EXPECT_THROW(decode_dump("XXXX"), Error);
  EXPECT_THROW(decode_dump(buf.substr(0, buf.size() - 3)), Error);
}

TEST(SolutionCsv, HeaderAndRowCount) {
  const ProbSpace space(5, 3);
  ProblemData data;
  data.initial.push_back({space.constant(2.0), [](const Point&) { return 1.0; }});
  const GridSpec grid = GridSpec::with_spacing(1, -1.0, 1.0, 1.0);
  const std::vector<double> times{0.5};
  const std::vector<double> gate_times{0.1};
  const auto vop = validate_kernel(EllipticOperator::heat(), gate_times).validated;
  const FieldSolution sol = mild_solution(*vop, data, grid, times, 3);
  const std::string csv = solution_csv(sol, &sol);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x_index,t,mean,variance,ky_fan_ref");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(csv.find("\n1,0.5,"), std::string::npos);
}

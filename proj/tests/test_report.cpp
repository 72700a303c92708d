#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "mtrl/errors.hpp"
#include "mtrl/report.hpp"

namespace mtrl::report {
namespace {

MetricsRecord record(const std::string& method, int trial, int K, double sd) {
  return {"synthetic", method, trial, 1, K, sd, 2 * sd, 10 * sd, 0.0};
}

TEST(ValidateRecord, AcceptsWellFormedRow) { EXPECT_NO_THROW(validate_record(record("mtrl", 0, 50, 0.3))); }

TEST(ValidateRecord, RejectsSchemaViolations) {
  EXPECT_THROW(validate_record(record("ucb", 0, 50, 0.3)), InvariantError);
  EXPECT_THROW(validate_record(record("mtrl", 0, 50, 1.5)), InvariantError);
  MetricsRecord r = record("mom", 0, 50, 0.3);
  r.regret = -1e-6;
  EXPECT_THROW(validate_record(r), InvariantError);
  r = record("mom", 0, 50, 0.3);
  r.est_err = NAN;
  EXPECT_THROW(validate_record(r), InvariantError);
  r = record("mom", 0, 0, 0.3);
  EXPECT_THROW(validate_record(r), InvariantError);
}

TEST(Aggregate, MeanAndStandardError) {
  const std::vector<MetricsRecord> rows{record("mtrl", 0, 50, 0.2), record("mtrl", 1, 50, 0.4),
                                        record("mtrl", 2, 50, 0.6), record("thompson", 0, 50, 0.1)};
  const auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].method, "mtrl");
  EXPECT_EQ(agg[0].n, 3);
  EXPECT_NEAR(agg[0].mean_sd, 0.4, 1e-15);
  // Sample deviation 0.2, so the standard error is 0.2 / sqrt(3).
  EXPECT_NEAR(agg[0].se_sd, 0.2 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(agg[0].mean_regret, 4.0, 1e-14);
  EXPECT_EQ(agg[1].se_sd, 0.0);
}

TEST(Aggregate, OrdersByFirstAppearanceThenK) {
  const std::vector<MetricsRecord> rows{record("random_policy", 0, 200, 0.5),
                                        record("mtrl", 0, 100, 0.3),
                                        record("random_policy", 0, 100, 0.6)};
  const auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg[0].method, "random_policy");
  EXPECT_EQ(agg[0].K, 100);
  EXPECT_EQ(agg[1].K, 200);
  EXPECT_EQ(agg[2].method, "mtrl");
}

TEST(MetricsCsv, HeaderAndRoundTrip) {
  std::vector<MetricsRecord> rows{record("mtrl", 0, 50, 0.123456789012345),
                                  record("mom", 3, 1600, 1.0 / 3.0)};
  rows[1].wall_ms = 12.5;
  const std::string text = metrics_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), "experiment,method,trial,h,K,sd,est_err,regret,wall_ms");
  const auto back = parse_metrics_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].method, "mom");
  EXPECT_EQ(back[1].trial, 3);
  EXPECT_EQ(back[1].sd, 1.0 / 3.0);
  EXPECT_EQ(back[0].sd, 0.123456789012345);
  EXPECT_EQ(back[1].wall_ms, 12.5);
  EXPECT_EQ(metrics_csv(back), text);
}

TEST(MetricsCsv, RejectsBadHeaderOrRow) {
  EXPECT_THROW(parse_metrics_csv("a,b\n"), InvariantError);
  EXPECT_THROW(parse_metrics_csv("experiment,method,trial,h,K,sd,est_err,regret,wall_ms\n"
                                 "synthetic,mtrl,0,1,50,0.3\n"),
               InvariantError);
}

TEST(AggregateCsv, HasDocumentedColumns) {
  const std::string text = aggregate_csv(aggregate({record("mtrl", 0, 50, 0.2)}));
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "method,K,h,mean_sd,se_sd,mean_err,se_err,mean_regret,se_regret");
}

TEST(DesignCsv, LeavesMinimaxFieldsEmptyForUniformPolicy) {
  DesignRecord uniform{0, "random_policy", 1, 0.5, 0.7, {}, {}, {}, {}, {}};
  DesignRecord designed{0, "mtrl", 1, 0.6, 0.8, 40, 1.5, 0.25, 3, true};
  const std::string text = design_csv({designed, uniform});
  EXPECT_NE(text.find("0,mtrl,1,0.6,0.8,40,1.5,0.25,3,1\n"), std::string::npos);
  EXPECT_NE(text.find("0,random_policy,1,0.5,0.7,,,,,\n"), std::string::npos);
}

TEST(LineChartSvg, ContainsOnePathPerSeries) {
  const std::vector<Series> series{{"mtrl", {50, 100, 1600}, {0.5, 0.4, 0.3}, {0.01, 0.01, 0.01}},
                                   {"mom", {50, 100, 1600}, {0.9, 0.8, 0.7}, {0.02, 0.02, 0.02}}};
  const std::string svg = line_chart_svg("sd", "K", "sd", series);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("mtrl"), std::string::npos);
  EXPECT_NE(svg.find("mom"), std::string::npos);
}

TEST(WriteText, CreatesDirectoriesAndReadsBack) {
  const auto dir = std::filesystem::temp_directory_path() / "mtrl_report_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text(dir / "x.txt", "hello\n");
  EXPECT_EQ(read_text(dir / "x.txt"), "hello\n");
  write_plots(aggregate({record("mtrl", 0, 50, 0.2), record("mtrl", 0, 100, 0.1)}), dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "sd.svg"));
  EXPECT_TRUE(std::filesystem::exists(dir / "regret.svg"));
  std::filesystem::remove_all(dir.parent_path());
}

TEST(ReadText, MissingFileThrowsIoError) {
  EXPECT_THROW(read_text("/nonexistent/mtrl/file.csv"), IoError);
}

}  // namespace
}  // namespace mtrl::report

#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dpca/error.hpp"
#include "dpca/experiments.hpp"
#include "oracles.hpp"

namespace dpca {
namespace {

CellSummary summary(Index p, std::size_t m, RadialLaw law, Method method, double mean) {
  return CellSummary{p, m, law, method, mean, 0.0, 1};
}

TEST(Method, TextRoundTrip) {
  for (Method m : {Method::d_pca, Method::d_eca, Method::f_eca, Method::f_pca}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(to_string(Method::d_eca), "D-ECA");
  EXPECT_TRUE(is_distributed(Method::d_pca));
  EXPECT_FALSE(is_distributed(Method::f_eca));
  EXPECT_EQ(estimator_of(Method::f_pca), EstimatorKind::pca);
  EXPECT_THROW(parse_method("X-ECA"), DataError);
}

TEST(ReplicationSeed, DependsOnEveryCoordinateButNotTheMethod) {
  const auto g = RadialLaw::gaussian();
  const auto base = replication_seed(1, 20, 5, g, 0);
  EXPECT_EQ(base, replication_seed(1, 20, 5, g, 0));
  EXPECT_NE(base, replication_seed(2, 20, 5, g, 0));
  EXPECT_NE(base, replication_seed(1, 50, 5, g, 0));
  EXPECT_NE(base, replication_seed(1, 20, 10, g, 0));
  EXPECT_NE(base, replication_seed(1, 20, 5, RadialLaw::student_t(1), 0));
  EXPECT_NE(base, replication_seed(1, 20, 5, g, 1));
}

TEST(RunReplication, DeterministicAndBounded) {
  const Cell cell{10, 3, RadialLaw::student_t(2), Method::d_eca};
  const auto a = run_replication(cell, 4, 99, 2, 50);
  const auto b = run_replication(cell, 4, 99, 2, 50);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.replication, 4u);
  EXPECT_EQ(a.wall_ms, 0.0);
  EXPECT_GE(a.rho1, 0.0);
  EXPECT_LE(a.rho1, 1.0);
  EXPECT_GT(run_replication(cell, 4, 99, 2, 50, true).wall_ms, 0.0);
}

TEST(RunReplication, OneMachineDistributedEqualsFullSample) {
  for (auto kind : {Method::d_eca, Method::d_pca}) {
    const Method full = kind == Method::d_eca ? Method::f_eca : Method::f_pca;
    const auto d = run_replication(Cell{12, 1, RadialLaw::gaussian(), kind}, 0, 5, 3, 80);
    const auto f = run_replication(Cell{12, 1, RadialLaw::gaussian(), full}, 0, 5, 3, 80);
    EXPECT_NEAR(d.rho1, f.rho1, 1e-8);
  }
}

TEST(RunCells, ThreadCountDoesNotChangeResults) {
  const std::vector<Cell> cells{{8, 2, RadialLaw::gaussian(), Method::d_eca},
                                {8, 2, RadialLaw::student_t(1), Method::f_eca},
                                {8, 4, RadialLaw::gaussian(), Method::d_pca}};
  const auto many = run_cells(cells, 3, 11, 2, 30);
  const auto one = run_cells(cells, 3, 11, 2, 30, false, 1);
  EXPECT_EQ(many, one);
  ASSERT_EQ(many.size(), 9u);
  EXPECT_TRUE(std::is_sorted(many.begin(), many.end(), record_less));
  const auto cell = run_cell(cells[0], 3, 11, 2, 30);
  ASSERT_EQ(cell.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(cell[r].replication, r);
}

TEST(RunExperiment, ValidatesConfig) {
  ExperimentConfig c;
  c.p_values = {2};
  EXPECT_THROW(run_experiment(c), DimensionError);
  c.p_values = {5};
  c.k = 0;
  EXPECT_THROW(run_experiment(c), DimensionError);
  c.k = 1;
  c.n_per_machine = 1;
  EXPECT_THROW(run_experiment(c), PartitionError);
}

TEST(CellsOf, EnumeratesTheGrid) {
  ExperimentConfig c;
  EXPECT_EQ(cells_of(c).size(), 2u * 4 * 4 * 3);
  c.include_p100 = true;
  EXPECT_EQ(cells_of(c).size(), 3u * 4 * 4 * 3);
}

TEST(RecordLess, RadialOrderIsGaussianThenHeavierTails) {
  ReplicationRecord a, b;
  a.radial = RadialLaw::gaussian();
  b.radial = RadialLaw::student_t(3);
  EXPECT_TRUE(record_less(a, b));
  a.radial = RadialLaw::student_t(2);
  EXPECT_TRUE(record_less(b, a));
  b = a;
  a.p = 50;
  b.p = 20;
  EXPECT_TRUE(record_less(b, a));
}

TEST(Summarize, MeanAndSampleSd) {
  std::vector<ReplicationRecord> recs;
  for (std::size_t r = 0; r < 4; ++r) {
    ReplicationRecord rec;
    rec.p = 20;
    rec.m = 5;
    rec.replication = r;
    rec.rho1 = 0.1 * static_cast<double>(r + 1);
    recs.push_back(rec);
  }
  recs.push_back(ReplicationRecord{20, 10, RadialLaw::gaussian(), Method::d_eca, 0, 0.3, 0});
  const auto s = summarize(recs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].mean_rho1, 0.25, 1e-15);
  // Deviations -0.15, -0.05, 0.05, 0.15 over n - 1 = 3.
  EXPECT_NEAR(s[0].sd_rho1, std::sqrt((0.0225 + 0.0025 + 0.0025 + 0.0225) / 3), 1e-15);
  EXPECT_EQ(s[0].n_reps, 4u);
  EXPECT_EQ(s[1].sd_rho1, 0.0);
  EXPECT_EQ(s[1].n_reps, 1u);
  EXPECT_EQ(&find_summary(s, 20, 10, RadialLaw::gaussian(), Method::d_eca), &s[1]);
  EXPECT_THROW(find_summary(s, 20, 10, RadialLaw::gaussian(), Method::f_eca), DataError);
}

TEST(FitLoglogSlope, ExactPowerLaw) {
  const std::vector<double> m{5, 10, 20, 40};
  std::vector<double> err;
  for (double v : m) err.push_back(0.08 / std::sqrt(v));
  const SlopeFit fit = fit_loglog_slope(m, err);
  EXPECT_NEAR(fit.slope, -0.5, 1e-10);
  EXPECT_NEAR(fit.intercept, std::log(0.08), 1e-10);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(FitLoglogSlope, FromSummariesSortsByM) {
  std::vector<CellSummary> s;
  for (double m : {40.0, 5.0, 20.0, 10.0}) {
    s.push_back(summary(20, static_cast<std::size_t>(m), RadialLaw::gaussian(), Method::d_eca,
                        0.3 * std::pow(m, -0.7)));
  }
  s.push_back(summary(20, 5, RadialLaw::gaussian(), Method::d_pca, 0.9));
  EXPECT_NEAR(fit_loglog_slope(s, 20, RadialLaw::gaussian(), Method::d_eca).slope, -0.7, 1e-10);
}

TEST(FitLoglogSlope, Errors) {
  const std::vector<double> two{5, 10}, e2{0.1, 0.05};
  EXPECT_THROW(fit_loglog_slope(two, e2), DataError);
  const std::vector<double> same{5, 5, 5}, e3{0.1, 0.2, 0.3};
  EXPECT_THROW(fit_loglog_slope(same, e3), DataError);
  const std::vector<double> m3{5, 10, 20}, bad{0.1, 0.0, 0.3};
  EXPECT_THROW(fit_loglog_slope(m3, bad), DataError);
  EXPECT_THROW(fit_loglog_slope(m3, e2), DimensionError);
}

TEST(CompareDecaFeca, GapsPerCell) {
  const auto g = RadialLaw::gaussian(), t1 = RadialLaw::student_t(1);
  const std::vector<CellSummary> s{summary(20, 5, g, Method::d_eca, 0.035),
                                   summary(20, 5, g, Method::f_eca, 0.033),
                                   summary(20, 5, g, Method::d_pca, 0.5),
                                   summary(20, 10, t1, Method::d_eca, 0.02),
                                   summary(20, 10, t1, Method::f_eca, 0.026),
                                   summary(50, 5, g, Method::d_eca, 0.1)};
  const DecaFecaComparison c = compare_deca_feca(s);
  ASSERT_EQ(c.cells.size(), 2u);
  EXPECT_NEAR(c.cells[0].gap, 0.002, 1e-15);
  EXPECT_NEAR(c.cells[1].gap, 0.006, 1e-15);
  EXPECT_NEAR(c.max_gap, 0.006, 1e-15);
  EXPECT_THROW(compare_deca_feca(std::span(s).first(1)), DataError);
}

TEST(CompareDecaFeca, OneMachineGivesNoGap) {
  const std::vector<Cell> cells{{10, 1, RadialLaw::student_t(2), Method::d_eca},
                                {10, 1, RadialLaw::student_t(2), Method::f_eca}};
  const auto recs = run_cells(cells, 3, 17, 2, 60);
  EXPECT_LE(compare_deca_feca(summarize(recs)).max_gap, 1e-8);
}

TEST(ResultsCsv, RoundTripAndHeaderOnly) {
  const std::vector<Cell> cells{{6, 2, RadialLaw::student_t(1), Method::d_pca},
                                {6, 2, RadialLaw::gaussian(), Method::f_eca}};
  const auto recs = run_cells(cells, 2, 3, 2, 20, true);
  std::stringstream ss;
  write_results_csv(ss, recs);
  EXPECT_EQ(read_results_csv(ss), recs);

  const auto sums = summarize(recs);
  std::stringstream s2;
  write_summary_csv(s2, sums);
  EXPECT_EQ(read_summary_csv(s2), sums);

  std::stringstream empty;
  write_results_csv(empty, {});
  EXPECT_EQ(empty.str(), "p,m,radial,method,replication,rho1,wall_ms\n");
  std::stringstream empty_summary;
  write_summary_csv(empty_summary, {});
  EXPECT_EQ(empty_summary.str(), "p,m,radial,method,mean_rho1,sd_rho1,n_reps\n");
}

TEST(ResultsCsv, SingleRecordHasZeroSd) {
  const std::vector<ReplicationRecord> one{
      ReplicationRecord{20, 5, RadialLaw::gaussian(), Method::d_eca, 0, 0.04, 0}};
  std::stringstream ss;
  write_summary_csv(ss, summarize(one));
  EXPECT_EQ(ss.str(),
            "p,m,radial,method,mean_rho1,sd_rho1,n_reps\n20,5,gaussian,D-ECA,0.04,0,1\n");
}

TEST(ResultsCsv, RejectsMalformedInput) {
  std::stringstream bad_header("p,m\n");
  EXPECT_THROW(read_results_csv(bad_header), IoError);
  std::stringstream short_row("p,m,radial,method,replication,rho1,wall_ms\n20,5,gaussian\n");
  EXPECT_THROW(read_results_csv(short_row), IoError);
  std::stringstream bad_number(
      "p,m,radial,method,replication,rho1,wall_ms\n20,5,gaussian,D-ECA,0,abc,0\n");
  EXPECT_THROW(read_results_csv(bad_number), IoError);
  std::stringstream nothing;
  EXPECT_THROW(read_summary_csv(nothing), IoError);
}

TEST(EmitResults, WritesBothFilesDeterministically) {
  const auto dir = test::scratch_dir("emit");
  const std::vector<Cell> cells{{6, 2, RadialLaw::gaussian(), Method::d_eca}};
  const auto recs = run_cells(cells, 3, 21, 2, 20);
  emit_results(recs, dir / "a");
  emit_results(run_cells(cells, 3, 21, 2, 20), dir / "b");
  for (const char* f : {"results.csv", "summary.csv"}) {
    std::ifstream a(dir / "a" / f), b(dir / "b" / f);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_FALSE(sa.str().empty());
    EXPECT_EQ(sa.str(), sb.str()) << f;
  }
  std::ifstream in(dir / "a" / "results.csv");
  EXPECT_EQ(read_results_csv(in), recs);
}

TEST(SyntheticFactorSeries, ShapesPersistenceAndErrors) {
  const FactorSeries s = synthetic_factor_series(6, 2, 4000, 0.8, RadialLaw::gaussian(), 31);
  EXPECT_EQ(s.x.rows(), 4000);
  EXPECT_EQ(s.x.cols(), 6);
  EXPECT_EQ(s.loading.rows(), 6);
  EXPECT_EQ(s.factors.cols(), 2);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const Eigen::VectorXd f = s.factors.values().col(j);
    const double lag = f.head(3999).dot(f.tail(3999)) / f.head(3999).squaredNorm();
    EXPECT_NEAR(lag, 0.8, 0.05) << j;
  }
  EXPECT_THROW(synthetic_factor_series(6, 2, 10, 1.0, RadialLaw::gaussian(), 1), DataError);
  EXPECT_THROW(synthetic_factor_series(6, 2, 1, 0.5, RadialLaw::gaussian(), 1), DataError);
}

TEST(ForecastStudy, DeterministicSmallRun) {
  ForecastStudyConfig c;
  c.p = 8;
  c.k = 2;
  c.length = 60;
  c.window = 30;
  c.replications = 2;
  const auto a = run_forecast_study(c);
  const auto b = run_forecast_study(c);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(a[r].replication, r);
    EXPECT_GT(a[r].d_eca_mse, 0.0);
    EXPECT_GT(a[r].d_pca_mse, 0.0);
    EXPECT_EQ(a[r].d_eca_mse, b[r].d_eca_mse);
    EXPECT_EQ(a[r].d_pca_mse, b[r].d_pca_mse);
  }
}

}  // namespace
}  // namespace dpca

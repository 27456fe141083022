#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dpca/distributed.hpp"
#include "dpca/elliptical.hpp"
#include "dpca/error.hpp"
#include "dpca/factor.hpp"
#include "dpca/grassmann.hpp"
#include "dpca/kendall.hpp"
#include "oracles.hpp"

namespace dpca {
namespace {

SubspacePoint point(const OrthonormalBasis& b) { return SubspacePoint(b); }

double loading_error(const RadialLaw& law, std::uint64_t seed) {
  const Eigen::MatrixXd l = standard_gaussian_loading(20, 3, seed);
  const FactorSample s = sample_factor_model(FactorModelSpec(l, law), 1000, seed + 1);
  const auto parts = partition_rows(s.x, 5);
  const LoadingEstimate est = estimate_loading_space(parts, 3);
  return rho1(point(OrthonormalBasis::orthonormalize(l)), point(est.basis()));
}

// Canonical correlations of two column sets after centring.
Eigen::VectorXd canonical_correlations(Eigen::MatrixXd a, Eigen::MatrixXd b) {
  a.rowwise() -= a.colwise().mean();
  b.rowwise() -= b.colwise().mean();
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                             Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                             Eigen::MatrixXd::Identity(b.rows(), b.cols());
  return Eigen::JacobiSVD<Eigen::MatrixXd>(qa.transpose() * qb).singularValues();
}

TEST(EstimateLoadingSpace, GaussianAndCauchyAccuracy) {
  EXPECT_LE(loading_error(RadialLaw::gaussian(), 110), 0.06);
  EXPECT_LE(loading_error(RadialLaw::student_t(1), 111), 0.07);
}

TEST(EstimateLoadingSpace, OneMachineEqualsFullSampleEca) {
  const FactorSample s =
      sample_factor_model(FactorModelSpec(standard_gaussian_loading(12, 2, 112), RadialLaw::gaussian()), 150, 113);
  const auto parts = partition_rows(s.x, 1);
  const LoadingEstimate est = estimate_loading_space(parts, 2, 0.5);
  EXPECT_EQ(est.alpha(), 0.5);
  const EigenResult full = sym_eig_topk(sample_kendall_tau(s.x), 2);
  EXPECT_LE(rho(point(est.basis()), point(full.basis)), 1e-8);
}

TEST(EstimateLoadingSpace, PartitionOrderDoesNotMatter) {
  const FactorSample s =
      sample_factor_model(FactorModelSpec(standard_gaussian_loading(10, 2, 114), RadialLaw::student_t(2)), 120, 115);
  const auto parts = partition_rows(s.x, 4);
  std::vector<Partition> reversed;
  for (std::size_t l = 0; l < 4; ++l) reversed.emplace_back(static_cast<std::uint32_t>(l + 1), parts[3 - l].data());
  EXPECT_LE(rho(point(estimate_loading_space(parts, 2).basis()),
                point(estimate_loading_space(reversed, 2).basis())),
            1e-10);
}

TEST(LoadingEstimate, ScaledLoading) {
  const LoadingEstimate a(OrthonormalBasis::canonical(16, 2), 1.0);
  EXPECT_NEAR(a.scaled()(0, 0), 4.0, 1e-14);
  const LoadingEstimate b(OrthonormalBasis::canonical(16, 2), 0.5);
  EXPECT_NEAR(b.scaled()(1, 1), 2.0, 1e-14);
  EXPECT_THROW(LoadingEstimate(OrthonormalBasis::canonical(4, 1), 0.0), DimensionError);
  EXPECT_THROW(LoadingEstimate(OrthonormalBasis::canonical(4, 1), 1.5), DimensionError);
}

TEST(FactorScores, InSpanRecoveryAndOrthogonalInputs) {
  std::mt19937_64 rng(116);
  const Eigen::MatrixXd full = test::random_orthonormal(9, 9, rng);
  const LoadingEstimate loading(OrthonormalBasis(Eigen::MatrixXd(full.leftCols(3))), 1.0);
  const Eigen::MatrixXd c = test::gaussian_matrix(5, 3, rng);
  const Partition in_span(1, DenseMatrix(c * loading.scaled().transpose()));
  EXPECT_LE((factor_scores(in_span, loading).scores.values() - c).cwiseAbs().maxCoeff(), 1e-10);

  const Eigen::MatrixXd w = test::gaussian_matrix(5, 6, rng);
  const Partition orth(2, DenseMatrix(w * full.rightCols(6).transpose()));
  const FactorScores z = factor_scores(orth, loading);
  EXPECT_EQ(z.machine_id, 2u);
  EXPECT_LE(z.scores.values().cwiseAbs().maxCoeff(), 1e-10);

  EXPECT_THROW(factor_scores(Partition(1, DenseMatrix(Eigen::MatrixXd::Ones(3, 4))), loading),
               DimensionError);
}

TEST(FactorScores, NormalEquationsMatchProjection) {
  std::mt19937_64 rng(117);
  for (double alpha : {1.0, 0.3}) {
    const Eigen::MatrixXd v = test::random_orthonormal(11, 3, rng);
    const LoadingEstimate loading{OrthonormalBasis(v), alpha};
    const Eigen::MatrixXd x = test::gaussian_matrix(20, 11, rng);
    const Eigen::MatrixXd route = std::pow(11.0, -alpha / 2) * x * v;
    EXPECT_LE((factor_scores(Partition(1, DenseMatrix(x)), loading).scores.values() - route)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
  }
}

TEST(FactorScores, TrackTheLatentFactorsInHighDimension) {
  const Eigen::MatrixXd l = standard_gaussian_loading(100, 3, 118);
  const FactorSample s = sample_factor_model(FactorModelSpec(l, RadialLaw::gaussian()), 400, 119);
  const auto parts = partition_rows(s.x, 2);
  const LoadingEstimate est = estimate_loading_space(parts, 3);
  const FactorScores f = factor_scores(Partition(1, s.x), est);
  const Eigen::VectorXd cc = canonical_correlations(f.scores.values(), s.factors.values());
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_GE(cc(i), 0.9) << i;
}

TEST(DistributedFactorModel, ScoresUseTheBroadcastBasis) {
  const FactorSample s =
      sample_factor_model(FactorModelSpec(standard_gaussian_loading(20, 3, 120), RadialLaw::student_t(3)), 500, 121);
  const auto parts = partition_rows(s.x, 5);
  InprocTransport in;
  TcpTransport tcp;
  const FactorModelFit a = distributed_factor_model(parts, 3, 1.0, in);
  const FactorModelFit b = distributed_factor_model(parts, 3, 1.0, tcp);
  EXPECT_EQ(a.ledger.scalars_uplinked, 300u);
  EXPECT_EQ(a.ledger.scalars_downlinked, 300u);
  EXPECT_EQ(a.ledger.messages, 10u);
  EXPECT_EQ(a.ledger, b.ledger);
  ASSERT_EQ(a.scores.size(), 5u);
  for (std::size_t l = 0; l < 5; ++l) {
    EXPECT_EQ(a.scores[l].machine_id, l + 1);
    const FactorScores local = factor_scores(parts[l], a.loading);
    EXPECT_EQ(a.scores[l].scores.values(), local.scores.values());
    EXPECT_LE((a.scores[l].scores.values() - b.scores[l].scores.values()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FitForecast, ConstantDataUsesPseudoInverse) {
  const DenseMatrix scores(Eigen::MatrixXd::Constant(10, 2, 3.0));
  const DenseMatrix targets(Eigen::MatrixXd::Constant(10, 4, -1.5));
  const ForecastModel m = fit_forecast(scores, targets, 1);
  EXPECT_EQ(m.horizon, 1u);
  EXPECT_LE((m.intercepts.array() + 1.5).abs().maxCoeff(), 1e-12);
  EXPECT_LE(m.slopes.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitForecast, ExactLinearModelIsRecovered) {
  std::mt19937_64 rng(122);
  const Eigen::MatrixXd f = test::gaussian_matrix(30, 3, rng);
  const Eigen::MatrixXd beta = test::gaussian_matrix(5, 3, rng);
  const Eigen::VectorXd alpha = test::gaussian_matrix(5, 1, rng);
  const std::size_t h = 2;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(30, 5);
  for (Eigen::Index t = 0; t + 2 < 30; ++t) y.row(t + 2) = (alpha + beta * f.row(t).transpose()).transpose();
  const ForecastModel m = fit_forecast(DenseMatrix(f), DenseMatrix(y), h);
  for (Eigen::Index t = 0; t + 2 < 30; ++t) {
    EXPECT_LE((m.predict(f.row(t).transpose()) - y.row(t + 2).transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_LE((m.slopes - beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitForecast, Errors) {
  const DenseMatrix f(Eigen::MatrixXd::Ones(4, 2));
  EXPECT_THROW(fit_forecast(f, DenseMatrix(Eigen::MatrixXd::Ones(4, 3)), 2), DataError);
  EXPECT_THROW(fit_forecast(f, DenseMatrix(Eigen::MatrixXd::Ones(5, 3)), 0), DimensionError);
}

TEST(FitForecast, FactorForecastBeatsInterceptOnly) {
  const Eigen::MatrixXd l = standard_gaussian_loading(20, 3, 123);
  const FactorSample s = sample_factor_model(FactorModelSpec(l, RadialLaw::gaussian()), 600, 124);
  const DenseMatrix train(s.x.values().topRows(400));
  const DenseMatrix test_rows(s.x.values().bottomRows(200));
  const auto parts = partition_rows(train, 4);
  const LoadingEstimate est = estimate_loading_space(parts, 3);
  const ForecastModel model = fit_forecast(factor_scores(Partition(1, train), est).scores, train, 0);
  const FactorScores f = factor_scores(Partition(1, test_rows), est);

  const Eigen::VectorXd train_mean = train.values().colwise().mean().transpose();
  double factor_sse = 0.0, intercept_sse = 0.0;
  for (Eigen::Index t = 0; t < 200; ++t) {
    const Eigen::VectorXd x = test_rows.values().row(t).transpose();
    factor_sse += (model.predict(f.scores.values().row(t).transpose()) - x).squaredNorm();
    intercept_sse += (train_mean - x).squaredNorm();
  }
  EXPECT_LT(factor_sse, intercept_sse);
}

TEST(FitForecast, PredictionsIgnoreLoadingScale) {
  std::mt19937_64 rng(125);
  const Eigen::MatrixXd x = test::gaussian_matrix(40, 8, rng);
  const OrthonormalBasis v(test::random_orthonormal(8, 2, rng));
  const LoadingEstimate a(v, 1.0), b(v, 0.25);
  const Partition part(1, DenseMatrix(x));
  const DenseMatrix fa = factor_scores(part, a).scores, fb = factor_scores(part, b).scores;
  const ForecastModel ma = fit_forecast(fa, part.data(), 1), mb = fit_forecast(fb, part.data(), 1);
  for (Eigen::Index t = 0; t < 40; ++t) {
    EXPECT_LE((ma.predict(fa.values().row(t).transpose()) - mb.predict(fb.values().row(t).transpose()))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
  }
}

TEST(RollingForecast, MethodAgainstItselfIsExactlyOne) {
  const FactorSample s =
      sample_factor_model(FactorModelSpec(standard_gaussian_loading(8, 2, 126), RadialLaw::student_t(3)), 80, 127);
  RollingOptions opt;
  opt.window = 30;
  opt.k = 2;
  opt.machines = 3;
  const RollingForecast a = rolling_forecast_error(s.x, opt);
  const RollingForecast b = rolling_forecast_error(s.x, opt);
  EXPECT_EQ(a.origins, 80u - 1 - 30 + 1);
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_EQ(a.mse(i) / b.mse(i), 1.0);
}

TEST(RollingForecast, WhiteNoiseShowsNoSystematicGap) {
  std::mt19937_64 rng(128);
  const DenseMatrix noise(test::gaussian_matrix(200, 10, rng));
  RollingOptions opt;
  opt.window = 40;
  opt.k = 2;
  opt.machines = 4;
  const RollingForecast d = rolling_forecast_error(noise, opt);
  opt.distributed = false;
  const RollingForecast f = rolling_forecast_error(noise, opt);
  const double ratio = d.mse.mean() / f.mse.mean();
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.25);
}

TEST(RollingForecast, Errors) {
  const DenseMatrix x(Eigen::MatrixXd::Random(30, 4));
  RollingOptions opt;
  opt.window = 1;
  EXPECT_THROW(rolling_forecast_error(x, opt), DataError);
  opt.window = 29;
  EXPECT_THROW(rolling_forecast_error(x, opt), DataError);
  opt.window = 10;
  opt.machines = 3;
  EXPECT_THROW(rolling_forecast_error(x, opt), PartitionError);
}

TEST(GroupMeanMse, AveragesInFirstSeenOrder) {
  Eigen::VectorXd mse(5);
  mse << 1, 2, 3, 4, 6;
  const std::vector<std::string> groups{"b", "a", "b", "a", "c"};
  const auto out = group_mean_mse(mse, groups);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].group, "b");
  EXPECT_DOUBLE_EQ(out[0].mse, 2.0);
  EXPECT_EQ(out[0].members, 2u);
  EXPECT_EQ(out[1].group, "a");
  EXPECT_DOUBLE_EQ(out[1].mse, 3.0);
  EXPECT_EQ(out[2].group, "c");
  EXPECT_DOUBLE_EQ(out[2].mse, 6.0);
  EXPECT_THROW(group_mean_mse(mse, std::span(groups).first(3)), DimensionError);
}

}  // namespace
}  // namespace dpca

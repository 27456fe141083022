#include "dpca/factor.hpp"

#include <cmath>
#include <unordered_map>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

namespace dpca {

LoadingEstimate::LoadingEstimate(OrthonormalBasis basis, double alpha)
    : basis_(std::move(basis)), alpha_(alpha) {
  if (!(alpha_ > 0.0 && alpha_ <= 1.0)) {
    throw DimensionError("LoadingEstimate: alpha must lie in (0, 1]");
  }
  const double p = static_cast<double>(basis_.ambient_dim());
  scaled_ = std::pow(p, alpha_ / 2.0) * basis_.columns();
}

LoadingEstimate estimate_loading_space(std::span<const Partition> parts,
                                       Index k, double alpha,
                                       Transport& transport) {
  DistributedResult r = run_distributed(parts, k, EstimatorKind::eca, transport);
  return LoadingEstimate(std::move(r.basis), alpha);
}

LoadingEstimate estimate_loading_space(std::span<const Partition> parts,
                                       Index k, double alpha) {
  InprocTransport transport;
  return estimate_loading_space(parts, k, alpha, transport);
}

FactorScores factor_scores(const Partition& local, const LoadingEstimate& loading) {
  const auto& x = local.data().values();
  const auto& l = loading.scaled();
  if (x.cols() != l.rows()) {
    throw DimensionError("factor_scores: loading is " + std::to_string(l.rows()) +
                         "-dimensional, data has " + std::to_string(x.cols()) +
                         " columns");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(l);
  if (qr.rank() < l.cols()) {
    throw DimensionError("factor_scores: scaled loading is rank deficient");
  }
  Eigen::MatrixXd f = qr.solve(x.transpose()).transpose();
  return FactorScores{local.machine_id(), DenseMatrix(std::move(f))};
}

FactorModelFit distributed_factor_model(std::span<const Partition> parts,
                                        Index k, double alpha,
                                        Transport& transport) {
  DistributedResult round = run_distributed(parts, k, EstimatorKind::eca, transport);
  CostLedger ledger = round.ledger;
  ledger += broadcast_back(round.basis, parts.size(), transport);

  std::vector<FactorScores> scores;
  scores.reserve(parts.size());
  for (const auto& part : parts) {
    OrthonormalBasis received = transport.worker(part.machine_id()).receive_downlink();
    scores.push_back(factor_scores(part, LoadingEstimate(std::move(received), alpha)));
  }
  return FactorModelFit{LoadingEstimate(std::move(round.basis), alpha),
                        std::move(scores), ledger};
}

ForecastModel fit_forecast(const DenseMatrix& scores, const DenseMatrix& targets,
                           std::size_t h) {
  const Index n = scores.rows();
  const Index k = scores.cols();
  if (targets.rows() != n) {
    throw DimensionError("fit_forecast: scores and targets differ in length");
  }
  if (n <= static_cast<Index>(h) + k) {
    throw DataError("fit_forecast: need more than h + K = " +
                    std::to_string(h + static_cast<std::size_t>(k)) + " rows");
  }
  const Index usable = n - static_cast<Index>(h);
  const Eigen::MatrixXd f = scores.values().topRows(usable);
  const Eigen::MatrixXd y = targets.values().middleRows(static_cast<Index>(h), usable);

  const Eigen::RowVectorXd f_mean = f.colwise().mean();
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  const Eigen::MatrixXd fc = f.rowwise() - f_mean;
  const Eigen::MatrixXd yc = y.rowwise() - y_mean;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  const Eigen::MatrixXd coef = svd.solve(yc);  // K x p

  ForecastModel model;
  model.horizon = h;
  model.slopes = coef.transpose();
  model.intercepts = (y_mean - f_mean * coef).transpose();
  return model;
}

RollingForecast rolling_forecast_error(const DenseMatrix& data,
                                       const RollingOptions& options) {
  const auto n_total = static_cast<std::size_t>(data.rows());
  const std::size_t w = options.window;
  const std::size_t h = options.horizon;
  if (w <= h) throw DataError("rolling_forecast_error: window must exceed horizon");
  if (n_total <= w + h) {
    throw DataError("rolling_forecast_error: need more than window + horizon rows");
  }
  if (options.distributed && w % options.machines != 0) {
    throw PartitionError("rolling_forecast_error: machines must divide the window");
  }

  const std::size_t origins = n_total - h - w + 1;
  const Index p = data.cols();
  std::vector<Eigen::VectorXd> sq_errors(origins);

  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, origins),
                    [&](const tbb::blocked_range<std::size_t>& r) {
    for (std::size_t o = r.begin(); o != r.end(); ++o) {
      const auto first = static_cast<Index>(o);
      const Index last = first + static_cast<Index>(w) - 1;  // origin t
      DenseMatrix window(data.values().middleRows(first, static_cast<Index>(w)));

      OrthonormalBasis basis;
      if (options.distributed) {
        InprocTransport transport;
        basis = run_distributed(window, options.machines, options.k, options.kind,
                                transport)
                    .basis;
      } else {
        basis = worker_step(Partition(1, window), options.k, options.kind).basis;
      }
      const LoadingEstimate loading(std::move(basis), options.alpha);
      const FactorScores scores = factor_scores(Partition(1, window), loading);
      const ForecastModel model = fit_forecast(scores.scores, window, h);

      const Eigen::VectorXd f_t = scores.scores.values().row(static_cast<Index>(w) - 1).transpose();
      const Eigen::VectorXd actual =
          data.values().row(last + static_cast<Index>(h)).transpose();
      sq_errors[o] = (model.predict(f_t) - actual).array().square().matrix();
    }
  });

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  for (const auto& e : sq_errors) sum += e;
  return RollingForecast{sum / static_cast<double>(origins), origins};
}

std::vector<GroupError> group_mean_mse(const Eigen::VectorXd& per_variable,
                                       std::span<const std::string> group_of_column) {
  if (static_cast<Index>(group_of_column.size()) != per_variable.size()) {
    throw DimensionError("group_mean_mse: one group label per variable required");
  }
  std::vector<GroupError> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < group_of_column.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(group_of_column[i], out.size());
    if (inserted) out.push_back(GroupError{group_of_column[i], 0.0, 0});
    auto& g = out[it->second];
    g.mse += per_variable(static_cast<Index>(i));
    g.members += 1;
  }
  for (auto& g : out) g.mse /= static_cast<double>(g.members);
  return out;
}

}  // namespace dpca

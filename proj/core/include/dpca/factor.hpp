#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpca/distributed.hpp"
#include "dpca/matrix.hpp"

namespace dpca {

/// Estimated loading space span(V) plus the scaled loading p^{alpha/2} V.
class LoadingEstimate {
 public:
  LoadingEstimate(OrthonormalBasis basis, double alpha);

  const OrthonormalBasis& basis() const noexcept { return basis_; }
  double alpha() const noexcept { return alpha_; }
  const Eigen::MatrixXd& scaled() const noexcept { return scaled_; }

 private:
  OrthonormalBasis basis_;
  double alpha_;
  Eigen::MatrixXd scaled_;
};

struct FactorScores {
  std::uint32_t machine_id = 0;
  DenseMatrix scores;  ///< n x K, row t is f_t
};

/// Distributed ECA round over `parts`; span of the result estimates span(L).
LoadingEstimate estimate_loading_space(std::span<const Partition> parts,
                                       Index k, double alpha,
                                       Transport& transport);
LoadingEstimate estimate_loading_space(std::span<const Partition> parts,
                                       Index k, double alpha = 1.0);

/// Least-squares factor scores argmin_b ||X_t - L b||_2 for every local row.
FactorScores factor_scores(const Partition& local, const LoadingEstimate& loading);

struct FactorModelFit {
  LoadingEstimate loading;
  std::vector<FactorScores> scores;  ///< one entry per machine, in id order
  CostLedger ledger;                 ///< uplink + downlink traffic
};

/// Loading space on the coordinator, basis sent back to every machine, scores
/// computed locally from the received basis.
FactorModelFit distributed_factor_model(std::span<const Partition> parts,
                                        Index k, double alpha,
                                        Transport& transport);

/// x_{t+h} = intercepts + slopes * f_t.
struct ForecastModel {
  std::size_t horizon = 0;
  Eigen::VectorXd intercepts;  ///< p
  Eigen::MatrixXd slopes;      ///< p x K

  Eigen::VectorXd predict(const Eigen::VectorXd& scores) const {
    return intercepts + slopes * scores;
  }
};

/// Per-variable OLS of targets(t + h, :) on (1, scores(t, :)) for all t with
/// t + h inside the sample. Requires n > h + K. Rank-deficient designs are
/// solved with the minimum-norm pseudo-inverse (cutoff 1e-12 * sigma_max).
ForecastModel fit_forecast(const DenseMatrix& scores, const DenseMatrix& targets,
                           std::size_t h);

struct RollingOptions {
  std::size_t window = 10;
  std::size_t horizon = 1;
  Index k = 3;
  std::size_t machines = 1;
  EstimatorKind kind = EstimatorKind::eca;
  bool distributed = true;
  double alpha = 1.0;
};

struct RollingForecast {
  Eigen::VectorXd mse;  ///< per variable
  std::size_t origins = 0;
};

/// Rolling-origin evaluation: for every origin t the factors are estimated on
/// rows [t - window + 1, t] (split over `machines` when distributed), the
/// forecast model is fitted inside the window and x_{t+h} is predicted from
/// f_t.
RollingForecast rolling_forecast_error(const DenseMatrix& data,
                                       const RollingOptions& options);

struct GroupError {
  std::string group;
  double mse = 0.0;
  std::size_t members = 0;
};

/// Mean of the per-variable MSEs inside each group; groups appear in order of
/// first occurrence.
std::vector<GroupError> group_mean_mse(const Eigen::VectorXd& per_variable,
                                       std::span<const std::string> group_of_column);

}  // namespace dpca

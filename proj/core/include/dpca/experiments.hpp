#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "dpca/distributed.hpp"
#include "dpca/elliptical.hpp"

namespace dpca {

/// Estimators compared by the simulation harness.
enum class Method {
  d_pca,  ///< distributed, sample covariance
  d_eca,  ///< distributed, Kendall's tau
  f_eca,  ///< full sample on one machine, Kendall's tau
  f_pca,  ///< full sample on one machine, sample covariance
};

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view text);
bool is_distributed(Method method) noexcept;
EstimatorKind estimator_of(Method method) noexcept;

struct ExperimentConfig {
  std::vector<Index> p_values{20, 50};
  /// Adds p = 100 to p_values (slow: the full-sample cells dominate).
  bool include_p100 = false;
  Index k = 3;
  Index n_per_machine = 200;
  std::vector<std::size_t> m_values{5, 10, 20, 40};
  std::vector<RadialLaw> radial_laws{RadialLaw::gaussian(), RadialLaw::student_t(3),
                                     RadialLaw::student_t(2), RadialLaw::student_t(1)};
  std::vector<Method> methods{Method::d_pca, Method::d_eca, Method::f_eca};
  std::size_t replications = 100;
  std::uint64_t base_seed = 20240601;
  /// Measure wall time per replication. Off by default: timings are the only
  /// non-reproducible field of the results file.
  bool record_timing = false;
  /// Worker threads for the replication pool; 0 lets TBB decide.
  std::size_t threads = 0;
};

struct Cell {
  Index p = 20;
  std::size_t m = 5;
  RadialLaw radial = RadialLaw::gaussian();
  Method method = Method::d_eca;
};

struct ReplicationRecord {
  Index p = 0;
  std::size_t m = 0;
  RadialLaw radial = RadialLaw::gaussian();
  Method method = Method::d_eca;
  std::size_t replication = 0;
  double rho1 = 0.0;
  double wall_ms = 0.0;

  friend bool operator==(const ReplicationRecord&, const ReplicationRecord&) = default;
};

/// Seed of the data (loading and sample) for one replication of (p, m,
/// radial). The method is deliberately not part of it, so all methods of a
/// replication see the same data.
std::uint64_t replication_seed(std::uint64_t base_seed, Index p, std::size_t m,
                               const RadialLaw& radial, std::size_t replication);

/// Generates the data of one replication and returns rho1(span(L), estimate).
ReplicationRecord run_replication(const Cell& cell, std::size_t replication,
                                  std::uint64_t base_seed, Index k = 3,
                                  Index n_per_machine = 200,
                                  bool record_timing = false);

/// All replications of one cell, in replication order. A failing replication
/// aborts the cell.
std::vector<ReplicationRecord> run_cell(const Cell& cell, std::size_t replications,
                                        std::uint64_t base_seed, Index k = 3,
                                        Index n_per_machine = 200,
                                        bool record_timing = false);

/// Replications of many cells on a work-stealing pool; output sorted by
/// (cell, replication).
std::vector<ReplicationRecord> run_cells(std::span<const Cell> cells,
                                         std::size_t replications,
                                         std::uint64_t base_seed, Index k,
                                         Index n_per_machine,
                                         bool record_timing = false,
                                         std::size_t threads = 0);

/// Every (p, m, radial, method) combination of `config`.
std::vector<Cell> cells_of(const ExperimentConfig& config);
std::vector<ReplicationRecord> run_experiment(const ExperimentConfig& config);

/// Canonical ordering: p, m, radial (Gaussian first, then decreasing nu),
/// method, replication.
bool record_less(const ReplicationRecord& a, const ReplicationRecord& b) noexcept;

struct CellSummary {
  Index p = 0;
  std::size_t m = 0;
  RadialLaw radial = RadialLaw::gaussian();
  Method method = Method::d_eca;
  double mean_rho1 = 0.0;
  /// Sample standard deviation; 0 for a single replication.
  double sd_rho1 = 0.0;
  std::size_t n_reps = 0;

  friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

std::vector<CellSummary> summarize(std::span<const ReplicationRecord> records);

/// Looks up one cell; throws DataError if absent.
const CellSummary& find_summary(std::span<const CellSummary> summaries, Index p,
                                std::size_t m, const RadialLaw& radial,
                                Method method);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// OLS of log(mean error) on log(m); needs at least 3 points.
SlopeFit fit_loglog_slope(std::span<const double> m_values,
                          std::span<const double> mean_errors);
SlopeFit fit_loglog_slope(std::span<const CellSummary> summaries, Index p,
                          const RadialLaw& radial, Method method);

struct CellGap {
  Index p = 0;
  std::size_t m = 0;
  RadialLaw radial = RadialLaw::gaussian();
  double d_eca = 0.0;
  double f_eca = 0.0;
  double gap = 0.0;
};

struct DecaFecaComparison {
  std::vector<CellGap> cells;
  double max_gap = 0.0;
};

/// |mean rho1(D-ECA) - mean rho1(F-ECA)| for every cell holding both.
DecaFecaComparison compare_deca_feca(std::span<const CellSummary> summaries);

// CSV I/O. Columns:
//   results: p,m,radial,method,replication,rho1,wall_ms
//   summary: p,m,radial,method,mean_rho1,sd_rho1,n_reps
// Reals are written in shortest round-trip form.
void write_results_csv(std::ostream& out, std::span<const ReplicationRecord> records);
void write_summary_csv(std::ostream& out, std::span<const CellSummary> summaries);
std::vector<ReplicationRecord> read_results_csv(std::istream& in);
std::vector<CellSummary> read_summary_csv(std::istream& in);

/// Writes results.csv and summary.csv into `dir` (created if needed).
void emit_results(std::span<const ReplicationRecord> records,
                  const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Forecasting study on synthetic factor series.

struct FactorSeries {
  DenseMatrix x;            ///< length x p
  Eigen::MatrixXd loading;  ///< p x K
  DenseMatrix factors;      ///< length x K
};

/// x_t = L f_t + u_t with f_t = phi f_{t-1} + eta_t and (eta_t, u_t) jointly
/// elliptical with scatter I_{K+p}. L has i.i.d. N(0, 1) entries. With
/// phi = 0 this is an i.i.d. sample of the factor model.
FactorSeries synthetic_factor_series(Index p, Index k, std::size_t length,
                                     double persistence, const RadialLaw& radial,
                                     std::uint64_t seed);

/// Defaults use t3 innovations: heavy tailed, but with the finite variance
/// that makes forecast MSE a meaningful yardstick.
struct ForecastStudyConfig {
  Index p = 20;
  Index k = 3;
  std::size_t length = 260;
  double persistence = 0.8;
  RadialLaw radial = RadialLaw::student_t(3);
  std::size_t window = 60;
  std::size_t horizon = 1;
  std::size_t machines = 3;
  std::size_t replications = 20;
  std::uint64_t base_seed = 7;
};

struct ForecastStudyRecord {
  std::size_t replication = 0;
  double d_eca_mse = 0.0;  ///< averaged over variables
  double d_pca_mse = 0.0;
};

std::vector<ForecastStudyRecord> run_forecast_study(const ForecastStudyConfig& config);

}  // namespace dpca

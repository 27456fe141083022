#include "dpca/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "dpca/dataset.hpp"
#include "dpca/factor.hpp"
#include "dpca/grassmann.hpp"
#include "dpca/rng.hpp"

namespace dpca {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::d_pca: return "D-PCA";
    case Method::d_eca: return "D-ECA";
    case Method::f_eca: return "F-ECA";
    case Method::f_pca: return "F-PCA";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::d_pca, Method::d_eca, Method::f_eca, Method::f_pca}) {
    if (text == to_string(m)) return m;
  }
  throw DataError("unknown method '" + std::string(text) +
                  "' (expected D-PCA, D-ECA, F-ECA or F-PCA)");
}

bool is_distributed(Method method) noexcept {
  return method == Method::d_pca || method == Method::d_eca;
}

EstimatorKind estimator_of(Method method) noexcept {
  return method == Method::d_eca || method == Method::f_eca ? EstimatorKind::eca
                                                            : EstimatorKind::pca;
}

std::uint64_t replication_seed(std::uint64_t base_seed, Index p, std::size_t m,
                               const RadialLaw& radial, std::size_t replication) {
  return mix_seed({base_seed, static_cast<std::uint64_t>(p), m,
                   stable_hash(radial.tag()), replication});
}

ReplicationRecord run_replication(const Cell& cell, std::size_t replication,
                                  std::uint64_t base_seed, Index k,
                                  Index n_per_machine, bool record_timing) {
  if (cell.m < 1) throw PartitionError("need at least one machine");
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed =
      replication_seed(base_seed, cell.p, cell.m, cell.radial, replication);

  const FactorModelSpec spec(standard_gaussian_loading(cell.p, k, mix_seed({seed, 1})),
                             cell.radial);
  const FactorSample sample = sample_factor_model(
      spec, n_per_machine * static_cast<Index>(cell.m), mix_seed({seed, 2}));

  OrthonormalBasis estimate;
  if (is_distributed(cell.method)) {
    InprocTransport transport;
    estimate = run_distributed(sample.x, cell.m, k, estimator_of(cell.method), transport).basis;
  } else {
    estimate = worker_step(Partition(1, sample.x), k, estimator_of(cell.method)).basis;
  }
  const SubspacePoint truth(OrthonormalBasis::orthonormalize(spec.loading()));

  ReplicationRecord rec{cell.p, cell.m, cell.radial, cell.method, replication,
                        rho1(truth, SubspacePoint(std::move(estimate))), 0.0};
  if (record_timing) {
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  }
  return rec;
}

std::vector<ReplicationRecord> run_cell(const Cell& cell, std::size_t replications,
                                        std::uint64_t base_seed, Index k,
                                        Index n_per_machine, bool record_timing) {
  std::vector<ReplicationRecord> out;
  out.reserve(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    out.push_back(run_replication(cell, r, base_seed, k, n_per_machine, record_timing));
  }
  return out;
}

namespace {

double radial_order(const RadialLaw& law) {
  return law.kind() == RadialLaw::Kind::gaussian ? -std::numeric_limits<double>::infinity()
                                                 : -law.nu();
}

auto record_key(const ReplicationRecord& r) {
  return std::tuple(r.p, r.m, radial_order(r.radial), static_cast<int>(r.method),
                    r.replication);
}

}  // namespace

bool record_less(const ReplicationRecord& a, const ReplicationRecord& b) noexcept {
  return record_key(a) < record_key(b);
}

std::vector<ReplicationRecord> run_cells(std::span<const Cell> cells,
                                         std::size_t replications,
                                         std::uint64_t base_seed, Index k,
                                         Index n_per_machine, bool record_timing,
                                         std::size_t threads) {
  const std::size_t total = cells.size() * replications;
  std::vector<ReplicationRecord> out(total);
  tbb::task_arena arena(threads == 0 ? tbb::task_arena::automatic
                                     : static_cast<int>(threads));
  arena.execute([&] {
    tbb::parallel_for(std::size_t{0}, total, [&](std::size_t i) {
      out[i] = run_replication(cells[i / replications], i % replications, base_seed, k,
                               n_per_machine, record_timing);
    });
  });
  std::stable_sort(out.begin(), out.end(), record_less);
  return out;
}

std::vector<Cell> cells_of(const ExperimentConfig& config) {
  std::vector<Index> ps = config.p_values;
  if (config.include_p100 && std::find(ps.begin(), ps.end(), Index{100}) == ps.end()) {
    ps.push_back(100);
  }
  std::vector<Cell> cells;
  for (Index p : ps) {
    for (std::size_t m : config.m_values) {
      for (const auto& law : config.radial_laws) {
        for (Method method : config.methods) cells.push_back(Cell{p, m, law, method});
      }
    }
  }
  return cells;
}

std::vector<ReplicationRecord> run_experiment(const ExperimentConfig& config) {
  if (config.k < 1) throw DimensionError("k must be >= 1");
  for (Index p : config.p_values) {
    if (p < config.k) {
      throw DimensionError("p=" + std::to_string(p) + " is smaller than k=" +
                           std::to_string(config.k));
    }
  }
  if (config.n_per_machine < 2) throw PartitionError("n_per_machine must be >= 2");
  const auto cells = cells_of(config);
  return run_cells(cells, config.replications, config.base_seed, config.k,
                   config.n_per_machine, config.record_timing, config.threads);
}

std::vector<CellSummary> summarize(std::span<const ReplicationRecord> records) {
  std::vector<ReplicationRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(), record_less);

  std::vector<CellSummary> out;
  for (std::size_t i = 0; i < sorted.size();) {
    const auto& head = sorted[i];
    std::size_t j = i;
    double sum = 0.0;
    while (j < sorted.size() && sorted[j].p == head.p && sorted[j].m == head.m &&
           sorted[j].radial == head.radial && sorted[j].method == head.method) {
      sum += sorted[j].rho1;
      ++j;
    }
    const auto count = j - i;
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t r = i; r < j; ++r) ss += (sorted[r].rho1 - mean) * (sorted[r].rho1 - mean);
    const double sd = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
    out.push_back(CellSummary{head.p, head.m, head.radial, head.method, mean, sd, count});
    i = j;
  }
  return out;
}

const CellSummary& find_summary(std::span<const CellSummary> summaries, Index p,
                                std::size_t m, const RadialLaw& radial,
                                Method method) {
  for (const auto& s : summaries) {
    if (s.p == p && s.m == m && s.radial == radial && s.method == method) return s;
  }
  throw DataError("no summary for p=" + std::to_string(p) + " m=" + std::to_string(m) +
                  " " + radial.tag() + " " + std::string(to_string(method)));
}

SlopeFit fit_loglog_slope(std::span<const double> m_values,
                          std::span<const double> mean_errors) {
  if (m_values.size() != mean_errors.size()) {
    throw DimensionError("fit_loglog_slope: m values and errors differ in length");
  }
  const std::size_t n = m_values.size();
  if (n < 3) throw DataError("fit_loglog_slope: need at least 3 points");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(m_values[i] > 0.0) || !(mean_errors[i] > 0.0)) {
      throw DataError("fit_loglog_slope: m and errors must be positive");
    }
    x[i] = std::log(m_values[i]);
    y[i] = std::log(mean_errors[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DataError("fit_loglog_slope: all m values are equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

SlopeFit fit_loglog_slope(std::span<const CellSummary> summaries, Index p,
                          const RadialLaw& radial, Method method) {
  std::vector<const CellSummary*> picked;
  for (const auto& s : summaries) {
    if (s.p == p && s.radial == radial && s.method == method) picked.push_back(&s);
  }
  std::sort(picked.begin(), picked.end(),
            [](const auto* a, const auto* b) { return a->m < b->m; });
  std::vector<double> ms, errs;
  for (const auto* s : picked) {
    ms.push_back(static_cast<double>(s->m));
    errs.push_back(s->mean_rho1);
  }
  return fit_loglog_slope(ms, errs);
}

DecaFecaComparison compare_deca_feca(std::span<const CellSummary> summaries) {
  DecaFecaComparison out;
  for (const auto& d : summaries) {
    if (d.method != Method::d_eca) continue;
    for (const auto& f : summaries) {
      if (f.method == Method::f_eca && f.p == d.p && f.m == d.m && f.radial == d.radial) {
        const double gap = std::abs(d.mean_rho1 - f.mean_rho1);
        out.cells.push_back(CellGap{d.p, d.m, d.radial, d.mean_rho1, f.mean_rho1, gap});
        out.max_gap = std::max(out.max_gap, gap);
      }
    }
  }
  if (out.cells.empty()) {
    throw DataError("compare_deca_feca: no cell holds both D-ECA and F-ECA results");
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kResultsHeader = "p,m,radial,method,replication,rho1,wall_ms";
constexpr std::string_view kSummaryHeader = "p,m,radial,method,mean_rho1,sd_rho1,n_reps";

std::size_t parse_count(const std::string& text) {
  const double v = parse_real(text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) {
    throw IoError("not a count: '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

template <class Row>
std::vector<Row> read_table(std::istream& in, std::string_view header,
                            Row (*parse_row)(const std::vector<std::string>&)) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file, expected header " + std::string(header));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw IoError("unexpected header '" + line + "', expected '" + std::string(header) + "'");
  }
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) {
      throw IoError("line " + std::to_string(lineno) + ": expected 7 fields");
    }
    try {
      rows.push_back(parse_row(cells));
    } catch (const Error& e) {
      throw IoError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

ReplicationRecord parse_record(const std::vector<std::string>& c) {
  return ReplicationRecord{static_cast<Index>(parse_count(c[0])), parse_count(c[1]),
                           RadialLaw::parse(c[2]),
                           parse_method(c[3]),
                           parse_count(c[4]),
                           parse_real(c[5]),
                           parse_real(c[6])};
}

CellSummary parse_summary(const std::vector<std::string>& c) {
  return CellSummary{static_cast<Index>(parse_count(c[0])), parse_count(c[1]),
                     RadialLaw::parse(c[2]),
                     parse_method(c[3]),
                     parse_real(c[4]),
                     parse_real(c[5]),
                     parse_count(c[6])};
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const ReplicationRecord> records) {
  out << kResultsHeader << '\n';
  for (const auto& r : records) {
    out << r.p << ',' << r.m << ',' << r.radial.tag() << ',' << to_string(r.method) << ','
        << r.replication << ',' << format_real(r.rho1) << ',' << format_real(r.wall_ms)
        << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const CellSummary> summaries) {
  out << kSummaryHeader << '\n';
  for (const auto& s : summaries) {
    out << s.p << ',' << s.m << ',' << s.radial.tag() << ',' << to_string(s.method) << ','
        << format_real(s.mean_rho1) << ',' << format_real(s.sd_rho1) << ',' << s.n_reps
        << '\n';
  }
}

std::vector<ReplicationRecord> read_results_csv(std::istream& in) {
  return read_table<ReplicationRecord>(in, kResultsHeader, parse_record);
}

std::vector<CellSummary> read_summary_csv(std::istream& in) {
  return read_table<CellSummary>(in, kSummaryHeader, parse_summary);
}

void emit_results(std::span<const ReplicationRecord> records,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<ReplicationRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(), record_less);
  const auto summaries = summarize(sorted);

  auto write = [&](const std::filesystem::path& path, auto&& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    body(out);
    if (!out) throw IoError("write failed: " + path.string());
  };
  write(dir / "results.csv", [&](std::ostream& o) { write_results_csv(o, sorted); });
  write(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, summaries); });
}

// ---------------------------------------------------------------------------
// Forecasting study

FactorSeries synthetic_factor_series(Index p, Index k, std::size_t length,
                                     double persistence, const RadialLaw& radial,
                                     std::uint64_t seed) {
  if (!(std::abs(persistence) < 1.0)) {
    throw DataError("synthetic_factor_series: |persistence| must be < 1");
  }
  if (length < 2) throw DataError("synthetic_factor_series: length must be >= 2");
  const FactorModelSpec spec(standard_gaussian_loading(p, k, mix_seed({seed, 1})), radial);
  const FactorSample shocks =
      sample_factor_model(spec, static_cast<Index>(length), mix_seed({seed, 2}));

  Eigen::MatrixXd f = shocks.factors.values();
  for (Index t = 1; t < f.rows(); ++t) f.row(t) += persistence * f.row(t - 1);
  Eigen::MatrixXd x = f * spec.loading().transpose() + shocks.noise.values();
  return FactorSeries{DenseMatrix(std::move(x)), spec.loading(), DenseMatrix(std::move(f))};
}

std::vector<ForecastStudyRecord> run_forecast_study(const ForecastStudyConfig& config) {
  std::vector<ForecastStudyRecord> out(config.replications);
  tbb::parallel_for(std::size_t{0}, config.replications, [&](std::size_t r) {
    const DenseMatrix series =
        synthetic_factor_series(config.p, config.k, config.length, config.persistence,
                                config.radial, mix_seed({config.base_seed, r}))
            .x;
    RollingOptions opts;
    opts.window = config.window;
    opts.horizon = config.horizon;
    opts.k = config.k;
    opts.machines = config.machines;
    opts.distributed = true;
    opts.kind = EstimatorKind::eca;
    const double eca = rolling_forecast_error(series, opts).mse.mean();
    opts.kind = EstimatorKind::pca;
    const double pca = rolling_forecast_error(series, opts).mse.mean();
    out[r] = ForecastStudyRecord{r, eca, pca};
  });
  return out;
}

}  // namespace dpca

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpca/dataset.hpp"
#include "dpca/distributed.hpp"
#include "dpca/experiments.hpp"
#include "dpca/factor.hpp"
#include "dpca/grassmann.hpp"
#include "dpca/rng.hpp"

#ifndef DPCA_VERSION
#define DPCA_VERSION "unknown"
#endif

namespace dpca::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

template <class Body>
void write_file(const fs::path& path, Body&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  if (!out) throw IoError("write failed: " + path.string());
}

/// Resolved options of `sub` in the same format `--config` reads back.
void write_manifest(const fs::path& dir, const CLI::App& sub) {
  write_file(dir / "manifest.toml", [&](std::ostream& o) {
    o << "# dpca " << DPCA_VERSION << '\n';
    o << '[' << sub.get_name() << "]\n" << sub.config_to_str(true, false);
  });
}

std::vector<std::string> column_labels(const char* prefix, Index count) {
  std::vector<std::string> names;
  for (Index j = 1; j <= count; ++j) names.push_back(prefix + std::to_string(j));
  return names;
}

MissingPolicy parse_missing(const std::string& text) {
  if (text == "error") return MissingPolicy::error_on_missing;
  if (text == "drop") return MissingPolicy::drop_rows;
  throw UsageError("--missing must be error or drop");
}

Dataset load_data(const std::string& path, const std::string& missing, std::size_t m,
                  bool trim) {
  Dataset d = ingest_csv(path, parse_missing(missing));
  if (trim && m > 0) {
    const Index keep = d.n() - d.n() % static_cast<Index>(m);
    if (keep < 2 * static_cast<Index>(m)) throw DataError("too few rows for " + std::to_string(m) + " machines");
    d.values = DenseMatrix(d.values.values().topRows(keep));
  }
  return d;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  SimulateOptions() {
    const ExperimentConfig d;
    p = d.p_values;
    with_p100 = d.include_p100;
    m = d.m_values;
    for (const auto& law : d.radial_laws) radial.push_back(law.tag());
    for (Method method : d.methods) methods.emplace_back(to_string(method));
    reps = d.replications;
    seed = d.base_seed;
    k = d.k;
    n = d.n_per_machine;
    threads = d.threads;
    timing = d.record_timing;
  }

  std::vector<Index> p;
  bool with_p100;
  std::vector<std::size_t> m;
  std::vector<std::string> radial;
  std::vector<std::string> methods;
  std::size_t reps;
  std::uint64_t seed;
  Index k;
  Index n;
  std::size_t threads;
  bool timing;
  std::string out;
};

void run_simulate(const SimulateOptions& o, const CLI::App& sub, std::ostream& out) {
  ExperimentConfig config;
  config.p_values = o.p;
  config.include_p100 = o.with_p100;
  config.m_values = o.m;
  config.radial_laws.clear();
  for (const auto& r : o.radial) config.radial_laws.push_back(RadialLaw::parse(r));
  config.methods.clear();
  for (const auto& m : o.methods) config.methods.push_back(parse_method(m));
  config.replications = o.reps;
  config.base_seed = o.seed;
  config.k = o.k;
  config.n_per_machine = o.n;
  config.threads = o.threads;
  config.record_timing = o.timing;

  const auto records = run_experiment(config);
  prepare_dir(o.out);
  emit_results(records, o.out);
  write_manifest(o.out, sub);
  out << "wrote " << records.size() << " replications to " << o.out << '\n';
}

// ---------------------------------------------------------------------------

struct GenerateOptions {
  Index p = 20;
  Index n = 800;
  Index k = 3;
  std::string radial = "t1";
  double persistence = 0.0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_generate(const GenerateOptions& o, const CLI::App& sub, std::ostream& out) {
  const FactorSeries s = synthetic_factor_series(o.p, o.k, static_cast<std::size_t>(o.n),
                                                 o.persistence, RadialLaw::parse(o.radial),
                                                 o.seed);
  prepare_dir(o.out);
  write_matrix_csv(fs::path(o.out) / "data.csv", s.x.values(), column_labels("x", o.p));
  write_matrix_csv(fs::path(o.out) / "loading.csv", s.loading, column_labels("l", o.k));
  write_manifest(o.out, sub);
  out << "wrote " << o.n << "x" << o.p << " sample to " << o.out << '\n';
}

// ---------------------------------------------------------------------------

struct NetworkOptions {
  std::string transport = "inproc";
  std::string listen;
  std::string connect;
  std::uint32_t machine_id = 0;
  bool external = false;
};

enum class Role { local, coordinator, worker };

Role resolve_role(const NetworkOptions& o) {
  if (o.transport == "inproc") {
    if (!o.listen.empty() || !o.connect.empty() || o.external) {
      throw UsageError("--listen, --connect and --external-workers need --transport tcp");
    }
    return Role::local;
  }
  if (o.transport != "tcp") throw UsageError("--transport must be inproc or tcp");
  if (o.listen.empty() == o.connect.empty()) {
    throw UsageError("--transport tcp needs exactly one of --listen or --connect");
  }
  if (!o.connect.empty()) {
    if (o.machine_id == 0) throw UsageError("--connect needs --machine-id (1-based)");
    return Role::worker;
  }
  return o.external ? Role::coordinator : Role::local;
}

std::unique_ptr<Transport> make_transport(const NetworkOptions& o, std::ostream& out) {
  if (o.transport == "inproc") return std::make_unique<InprocTransport>();
  auto tcp = std::make_unique<TcpTransport>(Endpoint::parse(o.listen));
  out << "listening on " << tcp->local_endpoint().str() << std::endl;
  return tcp;
}

/// Receives one uplink from each of `m` worker processes and aggregates.
DistributedResult coordinate_external(Transport& transport, std::size_t m, Index k) {
  transport.open(m);
  std::vector<EigenspaceMessage> msgs;
  try {
    while (msgs.size() < m) msgs.push_back(transport.receive_uplink());
  } catch (...) {
    transport.shutdown();
    throw;
  }
  Aggregate agg = coordinator_step(std::move(msgs), k);
  return DistributedResult{std::move(agg.basis), agg.cost};
}

void check_machine_id(const NetworkOptions& net, std::size_t m) {
  if (net.machine_id > m) {
    throw UsageError("--machine-id " + std::to_string(net.machine_id) + " exceeds --m " +
                     std::to_string(m));
  }
}

struct EstimateOptions {
  std::string data;
  Index k = 3;
  std::size_t m = 1;
  std::string method = "eca";
  std::string reference;
  std::string missing = "error";
  bool trim = false;
  std::string out;
  NetworkOptions net;
};

void run_estimate(const EstimateOptions& o, const CLI::App& sub, std::ostream& out) {
  const Role role = resolve_role(o.net);
  const EstimatorKind kind = parse_estimator_kind(o.method);
  check_machine_id(o.net, o.m);

  const Dataset data = load_data(o.data, o.missing, o.m, o.trim);
  if (role == Role::worker) {
    const auto parts = partition_rows(data.values, o.m);
    auto link = connect_worker(Endpoint::parse(o.net.connect), o.net.machine_id);
    link->send_uplink(worker_step(parts[o.net.machine_id - 1], o.k, kind));
    out << "machine " << o.net.machine_id << ": sent " << data.p() * o.k << " scalars\n";
    return;
  }

  auto transport = make_transport(o.net, out);
  const DistributedResult result =
      role == Role::coordinator ? coordinate_external(*transport, o.m, o.k)
                                : run_distributed(data.values, o.m, o.k, kind, *transport);
  transport->shutdown();

  if (o.out.empty()) throw UsageError("--out is required unless running as a worker");
  prepare_dir(o.out);
  write_matrix_csv(fs::path(o.out) / "basis.csv", result.basis.columns(),
                   column_labels("v", o.k));
  out << "p=" << data.p() << " k=" << o.k << " m=" << o.m << " method=" << o.method
      << " transport=" << transport->name()
      << " uplink_scalars=" << result.ledger.scalars_uplinked << '\n';

  if (!o.reference.empty()) {
    const Dataset ref = ingest_csv(o.reference);
    if (ref.n() != data.p() || ref.p() != o.k) {
      throw DimensionError("reference basis must be " + std::to_string(data.p()) + "x" +
                           std::to_string(o.k));
    }
    const SubspacePoint a(result.basis);
    const SubspacePoint b(OrthonormalBasis::orthonormalize(ref.values.values()));
    const double r = rho(a, b);
    const double r1 = rho1(a, b);
    write_file(fs::path(o.out) / "diagnostics.csv", [&](std::ostream& f) {
      f << "rho,rho1\n" << format_real(r) << ',' << format_real(r1) << '\n';
    });
    out << "rho=" << format_real(r) << " rho1=" << format_real(r1) << '\n';
  }
  write_manifest(o.out, sub);
}

// ---------------------------------------------------------------------------

struct FactorOptions {
  std::string data;
  Index k = 3;
  std::size_t m = 1;
  double alpha = 1.0;
  std::string missing = "error";
  bool trim = false;
  std::string out;
  NetworkOptions net;
};

void write_scores(const fs::path& dir, const FactorScores& s) {
  write_matrix_csv(dir / ("scores_machine_" + std::to_string(s.machine_id) + ".csv"),
                   s.scores.values(), column_labels("f", s.scores.cols()));
}

void run_factor(const FactorOptions& o, const CLI::App& sub, std::ostream& out) {
  const Role role = resolve_role(o.net);
  check_machine_id(o.net, o.m);
  if (o.out.empty()) throw UsageError("--out is required");

  const Dataset data = load_data(o.data, o.missing, o.m, o.trim);
  const auto parts = partition_rows(data.values, o.m);
  prepare_dir(o.out);

  if (role == Role::worker) {
    const Partition& part = parts[o.net.machine_id - 1];
    auto link = connect_worker(Endpoint::parse(o.net.connect), o.net.machine_id);
    link->send_uplink(worker_step(part, o.k, EstimatorKind::eca));
    const LoadingEstimate loading(link->receive_downlink(), o.alpha);
    write_scores(o.out, factor_scores(part, loading));
    write_manifest(o.out, sub);
    out << "machine " << o.net.machine_id << ": wrote scores to " << o.out << '\n';
    return;
  }

  auto transport = make_transport(o.net, out);
  OrthonormalBasis basis;
  CostLedger ledger;
  if (role == Role::coordinator) {
    DistributedResult r = coordinate_external(*transport, o.m, o.k);
    ledger = r.ledger;
    ledger += broadcast_back(r.basis, o.m, *transport);
    basis = std::move(r.basis);
  } else {
    FactorModelFit fit = distributed_factor_model(parts, o.k, o.alpha, *transport);
    for (const auto& s : fit.scores) write_scores(o.out, s);
    ledger = fit.ledger;
    basis = fit.loading.basis();
  }
  transport->shutdown();

  const LoadingEstimate loading(std::move(basis), o.alpha);
  write_matrix_csv(fs::path(o.out) / "loading_basis.csv", loading.basis().columns(),
                   column_labels("v", o.k));
  write_matrix_csv(fs::path(o.out) / "loading_scaled.csv", loading.scaled(),
                   column_labels("l", o.k));
  write_manifest(o.out, sub);
  out << "p=" << data.p() << " k=" << o.k << " m=" << o.m
      << " uplink_scalars=" << ledger.scalars_uplinked
      << " downlink_scalars=" << ledger.scalars_downlinked << '\n';
}

// ---------------------------------------------------------------------------

struct ForecastOptions {
  std::string data;
  std::size_t window = 120;
  std::size_t horizon = 1;
  Index k = 3;
  std::size_t m = 4;
  std::string groups;
  std::string missing = "error";
  std::string out;
};

std::vector<std::string> read_groups(const std::string& path,
                                     const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, std::string> group_of;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cells = split_csv_line(line);
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != 2) {
      throw IoError(path + ": line " + std::to_string(lineno) +
                    ": expected column_name,group");
    }
    if (lineno == 1 && cells[0] == "column_name" && cells[1] == "group") continue;
    if (!group_of.emplace(cells[0], cells[1]).second) {
      throw DataError(path + ": column '" + cells[0] + "' listed twice");
    }
  }
  const std::set<std::string> known(columns.begin(), columns.end());
  for (const auto& [col, group] : group_of) {
    if (!known.count(col)) throw DataError(path + ": unknown column '" + col + "'");
  }
  std::vector<std::string> out;
  for (const auto& c : columns) {
    auto it = group_of.find(c);
    if (it == group_of.end()) throw DataError(path + ": column '" + c + "' has no group");
    out.push_back(it->second);
  }
  return out;
}

void run_forecast(const ForecastOptions& o, const CLI::App& sub, std::ostream& out) {
  const Dataset data = load_data(o.data, o.missing, 0, false);
  const std::vector<std::string> names =
      data.column_names.empty() ? column_labels("x", data.p()) : data.column_names;
  const std::vector<std::string> groups =
      o.groups.empty() ? std::vector<std::string>{} : read_groups(o.groups, names);

  RollingOptions opts;
  opts.window = o.window;
  opts.horizon = o.horizon;
  opts.k = o.k;
  opts.machines = o.m;
  opts.kind = EstimatorKind::eca;
  const RollingForecast eca = rolling_forecast_error(data.values, opts);
  opts.kind = EstimatorKind::pca;
  const RollingForecast pca = rolling_forecast_error(data.values, opts);

  prepare_dir(o.out);
  write_file(fs::path(o.out) / "variable_mse.csv", [&](std::ostream& f) {
    f << "variable,d_eca_mse,d_pca_mse,ratio\n";
    for (Index j = 0; j < data.p(); ++j) {
      f << names[static_cast<std::size_t>(j)] << ',' << format_real(eca.mse(j)) << ','
        << format_real(pca.mse(j)) << ',' << format_real(eca.mse(j) / pca.mse(j)) << '\n';
    }
  });

  out << "origins=" << eca.origins << " mean_mse d_eca=" << format_real(eca.mse.mean())
      << " d_pca=" << format_real(pca.mse.mean())
      << " ratio=" << format_real(eca.mse.mean() / pca.mse.mean()) << '\n';

  if (!groups.empty()) {
    const auto ge = group_mean_mse(eca.mse, groups);
    const auto gp = group_mean_mse(pca.mse, groups);
    write_file(fs::path(o.out) / "group_mse.csv", [&](std::ostream& f) {
      f << "group,members,d_eca_mse,d_pca_mse,ratio\n";
      for (std::size_t g = 0; g < ge.size(); ++g) {
        f << ge[g].group << ',' << ge[g].members << ',' << format_real(ge[g].mse) << ','
          << format_real(gp[g].mse) << ',' << format_real(ge[g].mse / gp[g].mse) << '\n';
      }
    });
    for (std::size_t g = 0; g < ge.size(); ++g) {
      out << ge[g].group << ": d_eca=" << format_real(ge[g].mse)
          << " d_pca=" << format_real(gp[g].mse)
          << " ratio=" << format_real(ge[g].mse / gp[g].mse) << '\n';
    }
  }
  write_manifest(o.out, sub);
}

// ---------------------------------------------------------------------------

struct SlopeOptions {
  std::string summary;
  Index p = 20;
  std::string radial = "gaussian";
  std::string method = "D-ECA";
};

void run_slope(const SlopeOptions& o, std::ostream& out) {
  std::ifstream in(o.summary);
  if (!in) throw IoError("cannot open " + o.summary);
  const auto summaries = read_summary_csv(in);
  const SlopeFit fit =
      fit_loglog_slope(summaries, o.p, RadialLaw::parse(o.radial), parse_method(o.method));
  char line[64];
  std::snprintf(line, sizeof line, "%.4f", fit.slope);
  out << line << '\n';
}

void add_network_options(CLI::App* sub, NetworkOptions& net) {
  sub->add_option("--transport", net.transport, "inproc or tcp")
      ->check(CLI::IsMember({"inproc", "tcp"}))
      ->capture_default_str();
  sub->add_option("--listen", net.listen, "coordinator endpoint host:port (tcp)")
      ->capture_default_str();
  sub->add_option("--connect", net.connect, "run one worker against host:port (tcp)")
      ->capture_default_str();
  sub->add_option("--machine-id", net.machine_id, "1-based worker id for --connect")
      ->capture_default_str();
  sub->add_flag("--external-workers", net.external,
                "with --listen: wait for separate worker processes instead of local ones");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed principal/elliptical component analysis", "dpca"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DPCA_VERSION);
  app.set_config("--config", "", "TOML file with a [subcommand] section, e.g. a manifest.toml");
  app.fallthrough();

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of subspace estimation error");
  simulate->add_option("--p", sim.p, "dimensions")->capture_default_str();
  simulate->add_flag("--with-p100", sim.with_p100, "also run p = 100 (slow)");
  simulate->add_option("--m", sim.m, "machine counts")->capture_default_str();
  simulate->add_option("--radial", sim.radial, "gaussian or t<nu>")->capture_default_str();
  simulate->add_option("--methods", sim.methods, "D-PCA, D-ECA, F-ECA, F-PCA")
      ->capture_default_str();
  simulate->add_option("--reps", sim.reps, "replications per cell")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "base seed")->capture_default_str();
  simulate->add_option("--k", sim.k, "number of factors")->capture_default_str();
  simulate->add_option("--n", sim.n, "rows per machine")->capture_default_str();
  simulate->add_option("--threads", sim.threads, "0 = all cores")->capture_default_str();
  simulate->add_flag("--timing", sim.timing, "record wall time (not reproducible)");
  simulate->add_option("--out", sim.out, "output directory")->required();

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic elliptical factor sample");
  generate->add_option("--p", gen.p)->capture_default_str();
  generate->add_option("--n", gen.n, "rows")->capture_default_str();
  generate->add_option("--k", gen.k)->capture_default_str();
  generate->add_option("--radial", gen.radial, "gaussian or t<nu>")->capture_default_str();
  generate->add_option("--persistence", gen.persistence, "AR(1) coefficient of the factors")
      ->capture_default_str();
  generate->add_option("--seed", gen.seed)->capture_default_str();
  generate->add_option("--out", gen.out, "output directory")->required();

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "Distributed estimate of the top-k eigenspace");
  estimate->add_option("data,--data", est.data, "CSV file, one observation per row")->required();
  estimate->add_option("--k", est.k)->capture_default_str();
  estimate->add_option("--m", est.m, "machines")->capture_default_str();
  estimate->add_option("--method", est.method, "eca or pca")
      ->check(CLI::IsMember({"eca", "pca"}))
      ->capture_default_str();
  estimate->add_option("--reference", est.reference, "p x k CSV to compare against")->capture_default_str();
  estimate->add_option("--missing", est.missing, "error or drop")->capture_default_str();
  estimate->add_flag("--trim", est.trim, "drop trailing rows so that m divides n");
  estimate->add_option("--out", est.out, "output directory")->capture_default_str();
  add_network_options(estimate, est.net);

  FactorOptions fac;
  auto* factor = app.add_subcommand("factor", "Loading space and per-machine factor scores");
  factor->add_option("data,--data", fac.data)->required();
  factor->add_option("--k", fac.k)->capture_default_str();
  factor->add_option("--m", fac.m, "machines")->capture_default_str();
  factor->add_option("--alpha", fac.alpha, "factor strength in (0, 1]")->capture_default_str();
  factor->add_option("--missing", fac.missing, "error or drop")->capture_default_str();
  factor->add_flag("--trim", fac.trim, "drop trailing rows so that m divides n");
  factor->add_option("--out", fac.out, "output directory")->required();
  add_network_options(factor, fac.net);

  ForecastOptions fc;
  auto* forecast = app.add_subcommand("forecast", "Rolling D-ECA vs D-PCA factor forecasts");
  forecast->add_option("data,--data", fc.data)->required();
  forecast->add_option("--window", fc.window)->capture_default_str();
  forecast->add_option("--horizon", fc.horizon)->capture_default_str();
  forecast->add_option("--k", fc.k)->capture_default_str();
  forecast->add_option("--m", fc.m, "machines sharing each window")->capture_default_str();
  forecast->add_option("--groups", fc.groups, "CSV mapping column_name,group")->capture_default_str();
  forecast->add_option("--missing", fc.missing, "error or drop")->capture_default_str();
  forecast->add_option("--out", fc.out, "output directory")->required();

  SlopeOptions sl;
  auto* slope = app.add_subcommand("slope", "log-log slope of mean rho1 against m");
  slope->add_option("summary", sl.summary, "summary.csv from simulate")->required();
  slope->add_option("--p", sl.p)->capture_default_str();
  slope->add_option("--radial", sl.radial)->capture_default_str();
  slope->add_option("--method", sl.method)->capture_default_str();

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);

  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "dpca: error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*simulate) run_simulate(sim, *simulate, out);
    else if (*generate) run_generate(gen, *generate, out);
    else if (*estimate) run_estimate(est, *estimate, out);
    else if (*factor) run_factor(fac, *factor, out);
    else if (*forecast) run_forecast(fc, *forecast, out);
    else if (*slope) run_slope(sl, out);
  } catch (const UsageError& e) {
    err << "dpca: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "dpca: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dpca::cli

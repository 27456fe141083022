#include <benchmark/benchmark.h>

#include "dpca/distributed.hpp"
#include "dpca/elliptical.hpp"
#include "dpca/kendall.hpp"
#include "dpca/wire.hpp"

namespace {

using namespace dpca;

DenseMatrix factor_data(Index p, Index n, std::uint64_t seed) {
  const FactorModelSpec spec(standard_gaussian_loading(p, 3, seed), RadialLaw::student_t(2));
  return sample_factor_model(spec, n, seed + 1).x;
}

void BM_SampleKendallTau(benchmark::State& state) {
  const DenseMatrix x = factor_data(state.range(1), state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_kendall_tau(x));
  const auto n = static_cast<double>(state.range(0));
  state.counters["pairs/s"] =
      benchmark::Counter(n * (n - 1) / 2, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_SampleKendallTau)
    ->Args({200, 20})
    ->Args({200, 50})
    ->Args({1000, 20})
    ->Args({1000, 50})
    ->Args({4000, 100})
    ->Unit(benchmark::kMillisecond);

void BM_SampleCovariance(benchmark::State& state) {
  const DenseMatrix x = factor_data(state.range(1), state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_covariance(x));
}
BENCHMARK(BM_SampleCovariance)->Args({1000, 50})->Unit(benchmark::kMicrosecond);

void BM_SymEigTopK(benchmark::State& state) {
  const SymMatrix k = sample_kendall_tau(factor_data(state.range(0), 400, 3));
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig_topk(k, 3));
}
BENCHMARK(BM_SymEigTopK)->Arg(20)->Arg(50)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_RunDistributedInproc(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const DenseMatrix x = factor_data(50, 200 * static_cast<Index>(m), 4);
  InprocTransport transport;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_distributed(x, m, 3, EstimatorKind::eca, transport));
  }
}
BENCHMARK(BM_RunDistributedInproc)->Arg(5)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_RunDistributedTcp(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const DenseMatrix x = factor_data(50, 200 * static_cast<Index>(m), 5);
  TcpTransport transport;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_distributed(x, m, 3, EstimatorKind::eca, transport));
  }
}
BENCHMARK(BM_RunDistributedTcp)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_WireRoundTrip(benchmark::State& state) {
  const OrthonormalBasis basis = OrthonormalBasis::canonical(state.range(0), 3);
  const wire::Frame frame{wire::MessageType::eigenspace_uplink, 1, basis};
  for (auto _ : state) benchmark::DoNotOptimize(wire::decode(wire::encode(frame)));
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(wire::encode(frame).size()));
}
BENCHMARK(BM_WireRoundTrip)->Arg(20)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();

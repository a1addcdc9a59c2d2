#include <benchmark/benchmark.h>

#include "cvqkd/beam.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/optimizer.hpp"

using namespace cvqkd;

namespace {

CompositeChannel fading_channel() {
  CompositeChannel ch;
  ch.eta1 = 0.4;
  ch.eps2 = 0.025;
  ch.fading = FadingStats::from_variance(0.6, 0.003);
  return ch;
}

void BM_Spectrum(benchmark::State& state) {
  const SourceState src = build_source(ProtocolParams::squeezed(0.2, 4.0, 1.0, 1.5));
  const SharedState s = apply_composite(src, fading_channel());
  for (auto _ : state) benchmark::DoNotOptimize(symplectic_eigenvalues(s.gamma));
}
BENCHMARK(BM_Spectrum);

void BM_KeyRate(benchmark::State& state) {
  const ProtocolParams p = state.range(0) ? ProtocolParams::squeezed(0.2, 4.0, 0.95, 1.5)
                                          : ProtocolParams::squeezed(0.2, 4.0, 0.95);
  const CompositeChannel ch = fading_channel();
  for (auto _ : state) benchmark::DoNotOptimize(key_rate(p, ch));
}
BENCHMARK(BM_KeyRate)->Arg(0)->Arg(1);

void BM_Optimize(benchmark::State& state) {
  OptimizationSpec spec;
  spec.family = state.range(0) ? ProtocolFamily::Squeezed : ProtocolFamily::Coherent;
  ProtocolParams base;
  base.beta = 0.95;
  const CompositeChannel ch = fading_channel();
  for (auto _ : state) benchmark::DoNotOptimize(optimize(spec, base, ch));
}
BENCHMARK(BM_Optimize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EllipticTransmittance(benchmark::State& state) {
  double x = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(elliptic_transmittance(0.025, 0.018, 0.7, 0.004 + x, -0.003, 0.02));
    x = x > 0.01 ? 0.0 : x + 1e-5;
  }
}
BENCHMARK(BM_EllipticTransmittance);

void BM_Simulate(benchmark::State& state) {
  BeamScenario b;
  b.distance = 1500.0;
  b.rytov = 0.25;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(b, n, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

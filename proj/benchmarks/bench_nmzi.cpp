#include <benchmark/benchmark.h>

#include <vector>

#include "nmzi/analysis.hpp"
#include "nmzi/circuit_io.hpp"

namespace {

nmzi::Circuit preset() { return nmzi::build_nested_mzi(0.6, {2.0, 0.0}, 0.3, 0.0); }

void BM_ForwardPreset(benchmark::State& state) {
  const nmzi::Circuit c = preset();
  for (auto _ : state) benchmark::DoNotOptimize(nmzi::run_forward(c));
}
BENCHMARK(BM_ForwardPreset);

void BM_ForwardBackwardPreset(benchmark::State& state) {
  const nmzi::Circuit c = preset();
  for (auto _ : state) benchmark::DoNotOptimize(nmzi::run_both(c));
}
BENCHMARK(BM_ForwardBackwardPreset);

void BM_FringeScan(benchmark::State& state) {
  const nmzi::Circuit c = preset();
  const std::vector<double> phis = nmzi::uniform_phases(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nmzi::fringe_scan(c, 2, phis));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FringeScan)->Arg(16)->Arg(64)->Arg(256);

void BM_TsvfReport(benchmark::State& state) {
  const nmzi::Circuit c = preset();
  for (auto _ : state) benchmark::DoNotOptimize(nmzi::tsvf_report(c));
}
BENCHMARK(BM_TsvfReport);

void BM_LeakageSweep(benchmark::State& state) {
  const nmzi::Circuit c = preset();
  std::vector<double> deltas;
  for (int i = 0; i < state.range(0); ++i) deltas.push_back(1e-4 * (1 + i));
  for (auto _ : state) benchmark::DoNotOptimize(nmzi::leakage_sweep(c, deltas));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LeakageSweep)->Arg(9)->Arg(100);

void BM_ParseSerialize(benchmark::State& state) {
  const std::string text = nmzi::serialize_circuit(preset());
  for (auto _ : state) benchmark::DoNotOptimize(nmzi::serialize_circuit(nmzi::parse_circuit(text)));
}
BENCHMARK(BM_ParseSerialize);

}  // namespace

BENCHMARK_MAIN();

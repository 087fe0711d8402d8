// Serial (jobs = 1) against OpenMP (jobs = 0, all cores) for each parallel kernel.
// The second argument of every benchmark is the job count.

#include <benchmark/benchmark.h>

#include "convagg/experiments.hpp"
#include "convagg/localization.hpp"
#include "convagg/maurey.hpp"

using namespace convagg;

namespace {

const experiments::GeneratedProblem& problem() {
  static const auto g = experiments::make_problem(experiments::ProblemKind::outside_hull, 256, 12, 1.0, 1);
  return g;
}

void BM_RunGrid(benchmark::State& state) {
  experiments::ExperimentConfig cfg;
  cfg.grid = {{256, 4}, {256, 64}, {1024, 4}, {1024, 64}};
  cfg.replications = static_cast<std::size_t>(state.range(0));
  cfg.atoms_K = 128;
  for (auto _ : state) benchmark::DoNotOptimize(experiments::run_grid(cfg, int(state.range(1))));
  state.SetItemsProcessed(state.iterations() * 4 * state.range(0));
}

void BM_LocalizedSup(benchmark::State& state) {
  const auto seg = localization::random_segments(problem().dictionary, 1, 2).front();
  const localization::LocalizedClass cls{localization::SegmentExcessLoss{seg}, 0.04};
  for (auto _ : state)
    benchmark::DoNotOptimize(localization::localized_sup(cls, problem().problem, 256,
                                                         std::size_t(state.range(0)), 3,
                                                         int(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SegmentDeviations(benchmark::State& state) {
  const auto segs = localization::random_segments(problem().dictionary, 10, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(localization::simulate_segment_deviations(
        segs, problem().problem, 256, std::size_t(state.range(0)), 5, int(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_NetGap(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(maurey::net_approximation_gap(
        problem().dictionary, problem().problem, std::size_t(state.range(0)), int(state.range(1))));
}

}  // namespace

BENCHMARK(BM_RunGrid)->ArgsProduct({{20}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LocalizedSup)->ArgsProduct({{200}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SegmentDeviations)->ArgsProduct({{200}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NetGap)->ArgsProduct({{4}, {1, 0}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <cmath>

#include "rmst/density_pipeline.hpp"
#include "rmst/simulation.hpp"

using namespace rmst;

namespace {

const LogBetaDirecting kDirecting(1.0, Baseline::exponential(0.3));

const SurvivalDataset& study_data() {
  static const SurvivalDataset data = [] {
    ScenarioSpec sc;
    sc.censoring_rate = {0.05, 0.05};
    return generate(sc);
  }();
  return data;
}

void BM_PosteriorPsi(benchmark::State& state) {
  const LaplaceEvaluator post(CompoundPriorSpec(kDirecting, ScoreDistribution(0.5, 0.25, 0.25)),
                              study_data());
  for (auto _ : state) benchmark::DoNotOptimize(posterior_psi({3, 2}, 20.0, post));
}
BENCHMARK(BM_PosteriorPsi);

void BM_MeanDifferenceMoments(benchmark::State& state) {
  const LaplaceEvaluator post(CompoundPriorSpec(kDirecting, ScoreDistribution(0.5, 0.25, 0.25)),
                              study_data());
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mean_difference_moments(order, 30.0, post));
}
BENCHMARK(BM_MeanDifferenceMoments)->Arg(2)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_MaxEnt(benchmark::State& state) {
  const auto mesh = Mesh::uniform(static_cast<std::size_t>(state.range(0)), -6.0, 6.0);
  const std::vector<double> normal{0.0, 1.0, 0.0, 3.0, 0.0, 15.0};
  for (auto _ : state) benchmark::DoNotOptimize(solve_maxent(mesh, normal));
}
BENCHMARK(BM_MaxEnt)->Arg(600)->Arg(1200);

void BM_FitMap(benchmark::State& state) {
  MapGrid grid;
  grid.stratified = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_map(study_data(), kDirecting, grid));
}
BENCHMARK(BM_FitMap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <cstdint>
#include <numeric>
#include <vector>

#include "dbal/balancing.hpp"
#include "dbal/contrastive.hpp"
#include "dbal/estimation.hpp"
#include "dbal/experiment.hpp"
#include "dbal/spectral.hpp"
#include "dbal/synthetic.hpp"

namespace {

dbal::TargetMarginals corrupted(const dbal::JointMeasure& p) {
  return dbal::corrupt_marginals(dbal::TargetMarginals::of(p), {0.25, 7});
}

void BM_BalanceK(benchmark::State& state) {
  const auto m = static_cast<dbal::Index>(state.range(0));
  const auto p = dbal::spectrum_controlled_measure(m, 0.5);
  const auto targets = corrupted(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbal::balance_final(p, targets, 8));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BalanceK)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_BalanceToConvergence(benchmark::State& state) {
  const auto m = static_cast<dbal::Index>(state.range(0));
  const auto p = dbal::spectrum_controlled_measure(m, 0.9);
  const auto targets = corrupted(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbal::balance_to_convergence(p, targets));
  }
}
BENCHMARK(BM_BalanceToConvergence)->Arg(10)->Arg(100);

void BM_Decompose(benchmark::State& state) {
  const auto m = static_cast<dbal::Index>(state.range(0));
  const auto p = dbal::spectrum_controlled_measure(m, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbal::decompose(p));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Decompose)->RangeMultiplier(2)->Range(4, 128)->Complexity();

void BM_Estimate(benchmark::State& state) {
  const auto p = dbal::spectrum_controlled_measure(10, 0.5);
  const auto h = dbal::random_test_function(10, 10, 3);
  const auto sample = dbal::sample_empirical(p, 300, 11);
  const auto spec = dbal::EstimatorSpec::balanced(static_cast<int>(state.range(0)),
                                                  dbal::TargetMarginals::of(p));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbal::estimate(sample, h, spec));
  }
}
BENCHMARK(BM_Estimate)->Arg(0)->Arg(2)->Arg(8)->Arg(32);

void BM_MseMonteCarlo(benchmark::State& state) {
  const auto p = dbal::spectrum_controlled_measure(10, 0.5);
  const auto h = dbal::random_test_function(10, 10, 3);
  const auto targets = dbal::TargetMarginals::of(p);
  const std::vector<dbal::EstimatorSpec> specs{dbal::EstimatorSpec::empirical(),
                                               dbal::EstimatorSpec::ipwi(targets),
                                               dbal::EstimatorSpec::balanced(8, targets)};
  std::vector<std::uint64_t> seeds(200);
  std::iota(seeds.begin(), seeds.end(), 1);
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbal::mse_monte_carlo(p, h, specs, 300, seeds, jobs));
  }
}
BENCHMARK(BM_MseMonteCarlo)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_RunSimulation(benchmark::State& state) {
  dbal::SimulationConfig config;
  config.seeds = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbal::run_simulation(config));
  }
}
BENCHMARK(BM_RunSimulation)->Arg(10)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_BalancedClipLoss(benchmark::State& state) {
  const auto n = static_cast<dbal::Index>(state.range(0));
  const dbal::ScoreMatrix scores(dbal::Matrix::Random(n, n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbal::balanced_clip_loss(scores, 4));
  }
}
BENCHMARK(BM_BalancedClipLoss)->Arg(32)->Arg(256);

}  // namespace
BENCHMARK_MAIN();

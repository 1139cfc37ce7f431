#include <benchmark/benchmark.h>

#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbrelay/analysis.hpp"
#include "tbrelay/fock.hpp"
#include "tbrelay/optics.hpp"
#include "tbrelay/scenarios.hpp"

namespace {

using namespace tbrelay;

// n photons spread over the first modes, mixed by a dense DFT-like matrix.
void BM_ModeTransform(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  const int photons = static_cast<int>(state.range(1));
  auto reg = std::make_shared<ModeRegistry>(kDefaultMaxBins);
  for (int i = 0; i < modes; ++i) reg->add({"m" + std::to_string(i), 0, 0});
  Occupation occ(static_cast<std::size_t>(modes), 0);
  for (int p = 0; p < photons; ++p) ++occ[static_cast<std::size_t>(p % modes)];
  const FockState in = FockState::from_terms(reg, photons, {{occ, 1.0}});
  Eigen::MatrixXcd u(modes, modes);
  for (int j = 0; j < modes; ++j) {
    for (int k = 0; k < modes; ++k) u(k, j) = std::polar(1.0 / std::sqrt(modes), 2.0 * M_PI * j * k / modes);
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(modes));
  std::iota(idx.begin(), idx.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(mode_transform(in, idx, u));
}
BENCHMARK(BM_ModeTransform)->Args({4, 2})->Args({8, 4})->Args({12, 4})->Args({8, 6});

void BM_TeleportPointAnalytic(benchmark::State& state) {
  ExperimentConfig c = build_default_config();
  c.max_photons = static_cast<int>(state.range(0));
  const std::vector<double> x{0.7};
  for (auto _ : state) benchmark::DoNotOptimize(run_teleport_scan(c, x));
}
BENCHMARK(BM_TeleportPointAnalytic)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_TeleportPointMonteCarlo(benchmark::State& state) {
  ExperimentConfig c = build_default_config();
  c.mode = EvaluationMode::montecarlo;
  c.trials = state.range(0);
  const std::vector<double> x{0.7};
  for (auto _ : state) benchmark::DoNotOptimize(run_teleport_scan(c, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TeleportPointMonteCarlo)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_FringeFit(benchmark::State& state) {
  const auto x = phase_grid(16, 2.0);
  std::vector<double> y;
  for (double v : x) y.push_back(35.0 * (1.0 + 0.46 * std::cos(v)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_fringe(x, y));
}
BENCHMARK(BM_FringeFit);

}  // namespace

BENCHMARK_MAIN();

#include <map>

#include <benchmark/benchmark.h>

#include "pencrit/asymptotics.hpp"
#include "pencrit/contrast.hpp"
#include "pencrit/estimate.hpp"
#include "pencrit/select.hpp"
#include "pencrit/simulate.hpp"

namespace {

using namespace pencrit;

const Trajectory& ar_path(std::size_t n) {
  static std::map<std::size_t, Trajectory> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, simulate_acx(FamilySpec::arx(3), ParamVector{0.0, 0.5, 0.0, 0.0, 1.0}, n, 1000,
                                       Innovation::gaussian(), RngStream{1, 0}))
             .first;
  }
  return it->second;
}

const Trajectory& count_path(std::size_t n) {
  static std::map<std::size_t, Trajectory> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, simulate_mod(FamilySpec::ingarch11(), ParamVector{1.0, 0.3, 0.4}, n, 1000,
                                       Emission::poisson(), RngStream{1, 1}))
             .first;
  }
  return it->second;
}

void BM_GaussianContrast(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int order = static_cast<int>(state.range(1));
  const auto& tr = ar_path(n);
  const auto spec = FamilySpec::arx(3);
  const ParamVector theta{0.1, 0.4, 0.05, 0.0, 1.1};
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_contrast(spec, tr, theta, {order, false}).total);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_GaussianContrast)->Args({10000, 0})->Args({10000, 1})->Args({10000, 2});

void BM_PoissonContrastIngarch11(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int order = static_cast<int>(state.range(1));
  const auto& tr = count_path(n);
  const auto spec = FamilySpec::ingarch11();
  const ParamVector theta{1.1, 0.25, 0.35};
  for (auto _ : state) benchmark::DoNotOptimize(poisson_contrast(spec, tr, theta, {order, false}).total);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_PoissonContrastIngarch11)->Args({10000, 0})->Args({10000, 2});

void BM_FitAr1(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& tr = ar_path(n);
  const auto spec = FamilySpec::arx(3);
  for (auto _ : state) benchmark::DoNotOptimize(fit_mce(spec, tr, ModelSubset({0, 1, 4})).contrast_at_min);
}
BENCHMARK(BM_FitAr1)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SelectNested(benchmark::State& state) {
  const auto& tr = ar_path(2000);
  const auto spec = FamilySpec::arx(3);
  const auto cands = nested_models(spec);
  for (auto _ : state) benchmark::DoNotOptimize(select_model(spec, tr, cands, PenaltySchedule::log()).winner);
}
BENCHMARK(BM_SelectNested)->Unit(benchmark::kMillisecond);

void BM_OverfitProbability(benchmark::State& state) {
  PopulationMatrices pop;
  pop.F_star = Eigen::MatrixXd::Identity(1, 1);
  pop.G_star = 2.0 * pop.F_star;
  pop.F_tilde = Eigen::MatrixXd::Identity(2, 2);
  pop.G_tilde = 2.0 * pop.F_tilde;
  pop.G_cross = Eigen::MatrixXd::Zero(1, 2);
  pop.G_cross(0, 0) = 1.0;
  const auto jl = joint_limit_matrices(ModelSubset({0}), ModelSubset({0, 1}), pop);
  for (auto _ : state) benchmark::DoNotOptimize(overfit_probability(jl, 1.0, 1, 100000, RngStream{1, 0}).prob);
}
BENCHMARK(BM_OverfitProbability)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

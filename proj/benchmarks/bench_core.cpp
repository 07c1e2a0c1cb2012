#include <benchmark/benchmark.h>

#include "cjsis/isweights.hpp"
#include "cjsis/likelihood.hpp"
#include "cjsis/mcmc.hpp"
#include "cjsis/numeric.hpp"
#include "cjsis/simulate.hpp"
#include "cjsis/subsample.hpp"

using namespace cjsis;

namespace {

Theta truth(const ModelSpec& spec, int occasions) {
  Theta t = default_theta(spec, occasions);
  t.alpha[0] = 0.62;
  t.p[0] = 0.13;
  t.sigma_eps = 0.5;
  return t;
}

const CompressedDataset& desk_data() {
  static const CompressedDataset data = [] {
    const auto spec = ModelSpec::constant_model();
    return simulate_dataset(spec, truth(spec, 11), 11, default_releases(10450, 11), 1);
  }();
  return data;
}

}  // namespace

static void BM_NormalQuantile(benchmark::State& state) {
  double u = 0.0;
  for (auto _ : state) {
    u += 0.6180339887498949;
    if (u >= 1.0) u -= 1.0;
    benchmark::DoNotOptimize(normal_quantile(0.5 * u + 0.25));
  }
}
BENCHMARK(BM_NormalQuantile);

static void BM_CondLoglik(benchmark::State& state) {
  const auto spec = ModelSpec::constant_model();
  const auto theta = truth(spec, 11);
  const auto plans = plan_dataset(spec, desk_data());
  const ConditionalLikelihood lik(spec, theta);
  std::size_t j = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lik.loglik(plans[j], 0.3));
    j = (j + 1) % plans.size();
  }
}
BENCHMARK(BM_CondLoglik);

// One draw's weight over the remaining 80% of the desk-sized dataset.
static void BM_WeightPass(benchmark::State& state) {
  const auto spec = ModelSpec::constant_model();
  const auto theta = truth(spec, 11);
  SubsamplePlan plan;
  const auto sub = draw_subsample(desk_data(), plan, 1);
  const WeightTarget x2(spec, sub.x2);
  const auto method = static_cast<WeightMethod>(state.range(1));
  const int particles = static_cast<int>(state.range(0));
  std::uint64_t draw = 0;
  for (auto _ : state) {
    const ParticleStream stream{1, StreamDomain::weights, 1, draw++};
    if (method == WeightMethod::naive) {
      benchmark::DoNotOptimize(log_weight_naive(spec, theta, x2, particles, stream));
    } else {
      benchmark::DoNotOptimize(log_weight_stratified(spec, theta, x2, particles, false, stream));
    }
  }
}
BENCHMARK(BM_WeightPass)
    ->Args({100, static_cast<int>(WeightMethod::naive)})
    ->Args({100, static_cast<int>(WeightMethod::stratified)})
    ->Unit(benchmark::kMillisecond);

static void BM_SamplerIteration(benchmark::State& state) {
  const auto spec = ModelSpec::constant_model();
  SubsamplePlan plan;
  const auto sub = draw_subsample(desk_data(), plan, 1);
  ChainConfig config;
  SubposteriorSampler sampler(spec, 11, sub.x1.expand(), config, 1, 0);
  sampler.initialize();
  for (auto _ : state) sampler.iterate(false);
}
BENCHMARK(BM_SamplerIteration)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "bidgen/denoiser.hpp"
#include "bidgen/rng.hpp"
#include "bidgen/sampler.hpp"

using namespace bidgen;

namespace {

/// One per-period plan regeneration (the dominant cost of a policy call) as
/// a function of the diffusion step count.
void BM_generate_trajectory(benchmark::State& state) {
  DenoiserConfig cfg;
  cfg.T = 96;
  cfg.D = 5;
  cfg.channels = {32, 64};
  Rng rng(1);
  const auto params = init_denoiser(cfg, rng);
  const int K = static_cast<int>(state.range(0));
  const NoiseSchedule schedule = cosine_schedule(K, 0.008);
  SamplerConfig sc;
  sc.omega = 0.2;  // two network passes per denoise step

  const int h = 48;
  std::vector<double> history(static_cast<std::size_t>(h) * cfg.D);
  for (auto& v : history) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> y = {1.0};

  Rng gen(7);
  for (auto _ : state) {
    auto out = generate_trajectory(params, schedule, history, h, y.data(), sc, gen);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["K"] = K;
}
BENCHMARK(BM_generate_trajectory)->Arg(5)->Arg(10)->Arg(20)->Arg(30)->Arg(50)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

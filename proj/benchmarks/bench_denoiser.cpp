#include <benchmark/benchmark.h>

#include "bidgen/denoiser.hpp"
#include "bidgen/rng.hpp"
#include "bidgen/schedule.hpp"

using namespace bidgen;

namespace {

DenoiserConfig desk_config() {
  DenoiserConfig cfg;
  cfg.T = 96;
  cfg.D = 5;
  cfg.channels = {32, 64};
  return cfg;
}

void BM_predict_noise(benchmark::State& state) {
  const DenoiserConfig cfg = desk_config();
  Rng rng(1);
  const auto params = init_denoiser(cfg, rng);
  std::vector<double> x(static_cast<std::size_t>(cfg.T) * cfg.D), out(x.size());
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> y = {1.0};
  for (auto _ : state) {
    predict_noise(params, x.data(), 5, y.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_predict_noise);

void BM_train_step(benchmark::State& state) {
  const DenoiserConfig cfg = desk_config();
  const NoiseSchedule schedule = cosine_schedule(20, 0.008);
  Rng rng(2);
  const auto params = init_denoiser(cfg, rng);
  DenoiserSample sample;
  sample.x0.resize(static_cast<std::size_t>(cfg.T) * cfg.D);
  sample.eps.resize(sample.x0.size());
  for (auto& v : sample.x0) v = rng.uniform(-1.0, 1.0);
  for (auto& v : sample.eps) v = rng.normal();
  sample.k = 7;
  sample.cond = {1.0};
  std::vector<double> grad(params.w.size(), 0.0);
  for (auto _ : state) {
    const double loss = denoiser_loss_grad(params, schedule, sample, 1.0, grad);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_train_step);

}  // namespace

BENCHMARK_MAIN();

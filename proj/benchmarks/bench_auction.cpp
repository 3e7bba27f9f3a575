#include <benchmark/benchmark.h>

#include "bidgen/agents.hpp"
#include "bidgen/auction.hpp"

using namespace bidgen;

namespace {

void BM_env_step(benchmark::State& state) {
  EnvConfig cfg;
  cfg.seed = 3;
  std::vector<Action> actions(cfg.n_advertisers, Action{{6.0}});
  Environment env(cfg);
  for (auto _ : state) {
    if (env.finished()) {
      state.PauseTiming();
      env = Environment(cfg);
      state.ResumeTiming();
    }
    auto res = env.step(actions);
    benchmark::DoNotOptimize(res.cost.data());
  }
}
BENCHMARK(BM_env_step);

void BM_full_episode(benchmark::State& state) {
  EnvConfig cfg;
  cfg.seed = 4;
  PacingAgentConfig agent;
  for (auto _ : state) {
    Environment env(cfg);
    std::vector<PacingPolicy> pacers(cfg.n_advertisers, PacingPolicy(agent));
    std::vector<Policy*> policies;
    for (auto& p : pacers) policies.push_back(&p);
    auto trajectories = run_episode(env, policies);
    benchmark::DoNotOptimize(trajectories.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.T);
}
BENCHMARK(BM_full_episode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

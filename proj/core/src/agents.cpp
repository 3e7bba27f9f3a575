#include "bidgen/agents.hpp"

#include <algorithm>
#include <cmath>

#include "bidgen/errors.hpp"
#include "bidgen/util.hpp"

namespace bidgen {

void PacingAgentConfig::validate() const {
  if (!(lambda_lo <= lambda_init && lambda_init <= lambda_hi))
    fail(Errc::invalid_config, "pacing: need lambda_lo <= lambda_init <= lambda_hi");
  if (!(gain >= 0.0) || !std::isfinite(gain))
    fail(Errc::invalid_config, "pacing: gain must be finite and >= 0");
}

double pacing_lambda(const BidState& state, double lambda_prev,
                     const PacingAgentConfig& config) {
  const double target = 1.0 - state.remaining_time;
  const double actual = 1.0 - state.remaining_budget;
  const double e = target - actual;
  const double next = lambda_prev * (1.0 + config.gain * e);
  return std::clamp(next, config.lambda_lo, config.lambda_hi);
}

Action explore(const Action& action, Rng& rng, double sigma,
               const PacingAgentConfig& bounds) {
  if (sigma < 0.0) fail(Errc::invalid_argument, "explore: sigma must be >= 0");
  Action out = action;
  for (auto& l : out.lambdas) {
    if (sigma > 0.0) l *= std::exp(rng.normal(0.0, sigma));
    l = std::clamp(l, bounds.lambda_lo, bounds.lambda_hi);
  }
  return out;
}

PacingPolicy::PacingPolicy(PacingAgentConfig config)
    : config_(config), lambda_(config.lambda_init) {
  config_.validate();
}

void PacingPolicy::reset() { lambda_ = config_.lambda_init; }

Action PacingPolicy::act(const std::vector<BidState>& history) {
  lambda_ = pacing_lambda(history.back(), lambda_, config_);
  return Action{{lambda_}};
}

ExploringPolicy::ExploringPolicy(Policy& inner, double sigma, PacingAgentConfig bounds,
                                 Rng rng)
    : inner_(inner), sigma_(sigma), bounds_(bounds), rng_(rng) {}

void ExploringPolicy::reset() { inner_.reset(); }

Action ExploringPolicy::act(const std::vector<BidState>& history) {
  return explore(inner_.act(history), rng_, sigma_, bounds_);
}

TrajectoryDataset collect_dataset(const EnvConfig& env_config,
                                  const PacingAgentConfig& agent_config,
                                  int n_trajectories, double explore_sigma,
                                  const CollectOptions& options) {
  if (n_trajectories < 1)
    fail(Errc::invalid_argument, "collect_dataset: n_trajectories must be >= 1");
  env_config.validate();
  agent_config.validate();

  TrajectoryDataset ds;
  ds.trajectories.resize(n_trajectories);

  const std::size_t n_chunks = std::max(1, options.n_chunks);
  parallel_chunks(
      static_cast<std::size_t>(n_trajectories), n_chunks,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          EnvConfig ec = env_config;
          ec.seed = derive_seed(options.seed_base, i);
          Environment env(ec);

          const int logged = static_cast<int>(i) % ec.n_advertisers;
          std::vector<PacingPolicy> pacers(ec.n_advertisers, PacingPolicy(agent_config));
          ExploringPolicy explorer(pacers[logged], explore_sigma, agent_config,
                                   Rng(derive_seed(ec.seed, 0x5eed)));

          std::vector<Policy*> policies(ec.n_advertisers);
          for (int a = 0; a < ec.n_advertisers; ++a) policies[a] = &pacers[a];
          policies[logged] = &explorer;

          auto trajectories = run_episode(env, policies);
          ds.trajectories[i] = std::move(trajectories[logged]);
        }
      });

  ds.recompute_stats();
  return ds;
}

}  // namespace bidgen

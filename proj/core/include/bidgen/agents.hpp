#pragma once

#include <cstdint>

#include "bidgen/auction.hpp"
#include "bidgen/rng.hpp"
#include "bidgen/types.hpp"

namespace bidgen {

/// Proportional budget-pacing controller used to generate offline logs.
struct PacingAgentConfig {
  double lambda_init = 10.0;
  double gain = 0.4;  // proportional control gain, >= 0
  double lambda_lo = 0.01;
  double lambda_hi = 1000.0;

  void validate() const;
};

/// One control update: target spend fraction is 1 - remaining_time, the
/// error e = target - actual drives a multiplicative step
/// lambda <- clip(lambda_prev * (1 + gain * e)). Overspending never raises
/// lambda.
double pacing_lambda(const BidState& state, double lambda_prev,
                     const PacingAgentConfig& config);

/// Multiplies each lambda by exp(g), g ~ N(0, sigma^2), then clips to the
/// config bounds. sigma = 0 is the identity.
Action explore(const Action& action, Rng& rng, double sigma,
               const PacingAgentConfig& bounds);

class PacingPolicy : public Policy {
 public:
  explicit PacingPolicy(PacingAgentConfig config);
  void reset() override;
  Action act(const std::vector<BidState>& history) override;

 private:
  PacingAgentConfig config_;
  double lambda_;
};

/// Wraps another policy with log-normal action exploration.
class ExploringPolicy : public Policy {
 public:
  ExploringPolicy(Policy& inner, double sigma, PacingAgentConfig bounds, Rng rng);
  void reset() override;
  Action act(const std::vector<BidState>& history) override;

 private:
  Policy& inner_;
  double sigma_;
  PacingAgentConfig bounds_;
  Rng rng_;
};

class FixedLambdaPolicy : public Policy {
 public:
  explicit FixedLambdaPolicy(Action action) : action_(std::move(action)) {}
  Action act(const std::vector<BidState>&) override { return action_; }

 private:
  Action action_;
};

struct CollectOptions {
  std::uint64_t seed_base = 0;
  int n_chunks = 8;  // deterministic parallel split over episodes
};

/// Runs n seeded episodes with every advertiser on the pacing controller;
/// one logged advertiser per episode (rotating index) optionally explores,
/// and only its trajectory is stored. Stats are computed over the stored
/// trajectories.
TrajectoryDataset collect_dataset(const EnvConfig& env_config,
                                  const PacingAgentConfig& agent_config,
                                  int n_trajectories, double explore_sigma,
                                  const CollectOptions& options = {});

}  // namespace bidgen

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bidgen/agents.hpp"
#include "bidgen/checkpoint.hpp"
#include "bidgen/config.hpp"
#include "bidgen/oracle.hpp"

namespace bidgen {

/// Generative bidding policy: at each period it normalizes the observed
/// history, inpaints it into a freshly generated state trajectory conditioned
/// on the requested targets, extracts the next predicted state, and maps it
/// to lambdas through the inverse-dynamics head. A failed generation falls
/// back to the last valid lambdas with a logged warning.
class GenerativePolicy : public Policy {
 public:
  struct Options {
    std::vector<double> condition;  // layout-ordered; empty = unconditional
    double omega;
    double temperature;
    int replan_every = 1;
    std::uint64_t seed = 0;
  };

  GenerativePolicy(const PolicyBundle& bundle, Options options);

  void reset() override;
  Action act(const std::vector<BidState>& history) override;

 private:
  const PolicyBundle& bundle_;
  Options options_;
  Rng rng_;
  std::vector<double> plan_;  // cached normalized T x D generation
  int plan_period_ = -1;
  Action last_action_;
};

struct EpisodeScore {
  double score = 0.0;        // target's cumulative reward
  double oracle_value = 0.0; // hindsight optimum on the frozen landscape
  double oracle_ratio = 0.0;
  bool failed = false;
  std::uint64_t seed = 0;
};

struct BudgetMetrics {
  double budget = 0.0;
  double top_k_mean = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double oracle_mean = 0.0;
  double oracle_ratio = 0.0;  // mean of per-episode ratios
  int n_failed = 0;
  std::vector<EpisodeScore> episodes;
};

struct EvalOutcome {
  std::vector<BudgetMetrics> rows;
  std::vector<Trajectory> target_trajectories;  // all budgets, run order
};

/// Factory invoked once per episode; receives the per-episode seed so
/// stochastic policies can derive independent streams.
using PolicyFactory = std::function<std::unique_ptr<Policy>(std::uint64_t episode_seed)>;

/// Protocol: for each budget, n_runs seeded episodes where the target
/// advertiser runs the candidate policy (its budget pinned to the row's
/// value) and every competitor runs the pacing controller. Scores are summed
/// target rewards; the hindsight oracle is computed per episode on that
/// episode's frozen bid landscape. Failed episodes score 0 and are flagged.
EvalOutcome evaluate_policy(const PolicyFactory& make_policy, EnvConfig env_config,
                            const EvalConfig& eval_config,
                            const PacingAgentConfig& competitor);

/// Convenience wrapper running the bundled generative policy with the given
/// condition vector (empty = layout defaults: return=1, indicators=1).
EvalOutcome evaluate(const PolicyBundle& bundle, const EnvConfig& env_config,
                     const EvalConfig& eval_config, const PacingAgentConfig& competitor,
                     const std::vector<double>& condition = {});

/// Fraction of trajectories whose normalized CPC statistic exceeds C.
double exceed_ratio(const std::vector<Trajectory>& trajectories, double c,
                    const CpcNormalizer& norm);

/// Collect + label + train both model components under one experiment
/// config; returns a complete bundle.
PolicyBundle train_pipeline(const TrajectoryDataset& dataset, const ExperimentConfig& ex);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  double budget = 0.0;
  double top_k_mean = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double oracle_ratio = 0.0;
  bool failed = false;
  std::string error;
};

/// Repeats train+evaluate per axis value. axis: "diffusion_steps" | "seeds"
/// | "omega". A failed run is recorded and the sweep continues. The dataset
/// is collected once and reused across values.
std::vector<SweepRow> sweep(const std::string& axis, const std::vector<double>& values,
                            const ExperimentConfig& base, const TrajectoryDataset& dataset);

}  // namespace bidgen

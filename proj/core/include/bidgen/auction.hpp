#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "bidgen/rng.hpp"
#include "bidgen/types.hpp"

namespace bidgen {

/// Simulator parameters. Defaults mirror the reference advertising-system
/// table: 30 advertisers, 96 periods, 50-300 impressions per period,
/// budgets 1000-4000 Yuan, bids 0-1000 Yuan, unit impression values.
struct EnvConfig {
  int n_advertisers = 30;
  int T = 96;
  int n_min = 50;
  int n_max = 300;
  double budget_min = 1000.0;
  double budget_max = 4000.0;
  double bid_min = 0.0;
  double bid_max = 1000.0;
  double value_max = 1.0;
  double price_max = 1000.0;
  std::uint64_t seed = 0;

  // Number of ratio constraints J; actions carry J+1 lambdas. J=0 is the
  // budget-only (max return) setting, J=1 adds a cost-per-value bound.
  int n_constraints = 0;
  double cpc_bound = 0.0;

  // Impression-value distribution: value = scale_p * LogNormal(mu, sigma)
  // truncated to [0, value_max], scale_p ~ U[scale_lo, scale_hi] per period.
  double value_mu = -1.0;
  double value_sigma = 0.5;
  double scale_lo = 0.5;
  double scale_hi = 1.5;

  void validate() const;

  /// Alternate preset with the wider 100-500 impressions-per-period range.
  static EnvConfig wide_traffic_preset();
};

/// One impression opportunity: a per-advertiser private value vector.
struct Impression {
  std::vector<double> values;
  int period = 0;
};

struct ImpressionBatch {
  std::vector<Impression> impressions;
  int period = 0;
};

struct AuctionOutcome {
  int winner = -1;  // -1: no winner
  double price = 0.0;
  double winner_value = 0.0;
};

/// Pure single-slot second-price rule over clipped bids: highest positive
/// bid wins and pays the highest remaining bid (0 if alone); ties break to
/// the lowest advertiser index. All-zero bids produce no winner.
AuctionOutcome run_auction(const std::vector<double>& bids, const Impression& impression);

struct StepResult {
  std::vector<double> cost;       // per-advertiser spend this period
  std::vector<double> value;      // per-advertiser won value this period
  std::vector<BidState> next_state;
};

/// Seeded multi-advertiser second-price environment. One instance is
/// single-threaded and owns its RNG stream; identical (seed, bids) replay
/// identically. Run several instances for parallelism.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  const EnvConfig& config() const { return config_; }
  int period() const { return period_; }
  bool finished() const { return period_ >= config_.T; }
  const std::vector<double>& budgets() const { return budgets_; }
  double remaining_budget(int advertiser) const;

  /// Replaces one advertiser's budget before the episode starts (used by the
  /// evaluation harness to pin the target's budget).
  void override_budget(int advertiser, double budget);

  /// Draws the current period's impressions from the seeded stream and
  /// advances it. step() calls this internally; calling it directly is for
  /// distribution inspection.
  ImpressionBatch sample_impressions();

  /// Runs one period: maps lambdas to bids per impression, applies the
  /// budget-feasibility exclusion, accumulates costs and values, and
  /// returns the next observed state per advertiser.
  StepResult step(const std::vector<Action>& actions);

  BidState observed_state(int advertiser) const;

  /// Records (own value, highest competing bid) for every impression seen by
  /// one advertiser; feeds the hindsight oracle.
  void enable_impression_log(int advertiser);
  const std::vector<std::pair<double, double>>& impression_log() const;

  /// Running conservation audit over every resolved auction.
  struct Audit {
    std::int64_t n_auctions = 0;
    std::int64_t n_winners = 0;
    double min_bid_price_gap = 0.0;  // min over winners of (winning bid - price)
  };
  const Audit& audit() const { return audit_; }

  const StateGuards& guards() const { return guards_; }

 private:
  EnvConfig config_;
  Rng rng_;
  StateGuards guards_;
  int period_ = 0;
  std::vector<double> budgets_;
  std::vector<double> spent_total_, value_total_, last_cost_, last_value_;
  int logged_advertiser_ = -1;
  std::vector<std::pair<double, double>> impression_log_;
  Audit audit_;
};

/// Per-advertiser decision callback. act() sees this advertiser's own state
/// history s_0..s_t and returns the lambdas for period t.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset() {}
  virtual Action act(const std::vector<BidState>& history) = 0;
};

/// Runs a full episode, one policy per advertiser. A policy returning a
/// non-finite lambda aborts with a policy_fault error naming the advertiser.
std::vector<Trajectory> run_episode(Environment& env,
                                    const std::vector<Policy*>& policies);

/// Order-stable FNV digest over every state, action, reward and cost of an
/// episode; used for determinism checks.
std::uint64_t episode_digest(const std::vector<Trajectory>& trajectories);

}  // namespace bidgen

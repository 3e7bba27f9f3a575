#include "bidgen/auction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bidgen/errors.hpp"
#include "bidgen/util.hpp"

namespace bidgen {

void EnvConfig::validate() const {
  if (n_advertisers < 1) fail(Errc::invalid_config, "n_advertisers must be >= 1");
  if (T < 1) fail(Errc::invalid_config, "T must be >= 1");
  if (n_min < 1 || n_max < n_min) fail(Errc::invalid_config, "need 1 <= n_min <= n_max");
  if (budget_min <= 0.0 || budget_max < budget_min)
    fail(Errc::invalid_config, "need 0 < budget_min <= budget_max");
  if (bid_min < 0.0 || bid_max < bid_min)
    fail(Errc::invalid_config, "need 0 <= bid_min <= bid_max");
  if (value_max <= 0.0) fail(Errc::invalid_config, "value_max must be > 0");
  if (price_max <= 0.0) fail(Errc::invalid_config, "price_max must be > 0");
  if (n_constraints < 0) fail(Errc::invalid_config, "n_constraints must be >= 0");
  if (n_constraints > 0 && cpc_bound <= 0.0)
    fail(Errc::invalid_config, "cpc_bound must be > 0 when constraints are enabled");
  if (!(value_sigma > 0.0)) fail(Errc::invalid_config, "value_sigma must be > 0");
  if (!(scale_lo > 0.0 && scale_hi >= scale_lo))
    fail(Errc::invalid_config, "need 0 < scale_lo <= scale_hi");
}

EnvConfig EnvConfig::wide_traffic_preset() {
  EnvConfig c;
  c.n_min = 100;
  c.n_max = 500;
  return c;
}

AuctionOutcome run_auction(const std::vector<double>& bids, const Impression& impression) {
  AuctionOutcome out;
  if (bids.size() != impression.values.size())
    fail(Errc::shape_mismatch, "run_auction: bids/values size mismatch");
  int best = -1;
  double best_bid = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const double b = bids[i];
    if (b <= 0.0) continue;
    if (b > best_bid) {
      second = best_bid;
      best_bid = b;
      best = static_cast<int>(i);
    } else if (b > second) {
      second = b;
    }
  }
  if (best < 0) return out;  // nobody bid
  out.winner = best;
  out.price = second;
  out.winner_value = impression.values[static_cast<std::size_t>(best)];
  return out;
}

Environment::Environment(EnvConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  const int n = config_.n_advertisers;
  budgets_.resize(n);
  for (int i = 0; i < n; ++i)
    budgets_[i] = rng_.uniform(config_.budget_min, config_.budget_max);
  spent_total_.assign(n, 0.0);
  value_total_.assign(n, 0.0);
  last_cost_.assign(n, 0.0);
  last_value_.assign(n, 0.0);
}

double Environment::remaining_budget(int advertiser) const {
  return budgets_[advertiser] - spent_total_[advertiser];
}

void Environment::override_budget(int advertiser, double budget) {
  if (advertiser < 0 || advertiser >= config_.n_advertisers)
    fail(Errc::invalid_argument, "override_budget: advertiser out of range");
  if (budget <= 0.0) fail(Errc::invalid_argument, "override_budget: budget must be > 0");
  if (period_ != 0 || spent_total_[advertiser] != 0.0)
    fail(Errc::invalid_argument, "override_budget: episode already started");
  budgets_[advertiser] = budget;
}

ImpressionBatch Environment::sample_impressions() {
  if (finished()) fail(Errc::invalid_argument, "sample_impressions: episode finished");
  ImpressionBatch batch;
  batch.period = period_;
  const int count = static_cast<int>(rng_.uniform_int(config_.n_min, config_.n_max));
  const double scale = rng_.uniform(config_.scale_lo, config_.scale_hi);
  batch.impressions.reserve(count);
  for (int i = 0; i < count; ++i) {
    Impression imp;
    imp.period = period_;
    imp.values.resize(config_.n_advertisers);
    for (int a = 0; a < config_.n_advertisers; ++a) {
      double v = scale * rng_.lognormal(config_.value_mu, config_.value_sigma);
      for (int tries = 0; v > config_.value_max && tries < 64; ++tries)
        v = scale * rng_.lognormal(config_.value_mu, config_.value_sigma);
      imp.values[a] = std::min(v, config_.value_max);
    }
    batch.impressions.push_back(std::move(imp));
  }
  return batch;
}

BidState Environment::observed_state(int advertiser) const {
  EpisodeContext ctx;
  ctx.horizon = config_.T;
  ctx.spent_total = spent_total_[advertiser];
  ctx.value_total = value_total_[advertiser];
  ctx.last_cost = last_cost_[advertiser];
  ctx.last_value = last_value_[advertiser];
  const int p = std::min(period_, config_.T - 1);
  return compute_state(ctx, budgets_[advertiser], p, guards_);
}

void Environment::enable_impression_log(int advertiser) {
  if (advertiser < 0 || advertiser >= config_.n_advertisers)
    fail(Errc::invalid_argument, "enable_impression_log: advertiser out of range");
  logged_advertiser_ = advertiser;
  impression_log_.clear();
}

const std::vector<std::pair<double, double>>& Environment::impression_log() const {
  return impression_log_;
}

StepResult Environment::step(const std::vector<Action>& actions) {
  if (finished()) fail(Errc::invalid_argument, "step: episode finished");
  const int n = config_.n_advertisers;
  if (static_cast<int>(actions.size()) != n)
    fail(Errc::shape_mismatch, "step: one action per advertiser required");
  const std::size_t n_lambdas = static_cast<std::size_t>(config_.n_constraints) + 1;
  for (const auto& a : actions) {
    if (a.lambdas.size() != n_lambdas)
      fail(Errc::shape_mismatch, "step: action length != J+1");
  }

  StepResult result;
  result.cost.assign(n, 0.0);
  result.value.assign(n, 0.0);

  const ImpressionBatch batch = sample_impressions();
  std::vector<double> bids(n);
  std::vector<char> eligible(n);

  for (const auto& imp : batch.impressions) {
    double top_other = 0.0;  // highest competing bid for the logged advertiser
    for (int a = 0; a < n; ++a) {
      double b = actions[a].lambdas[0] * imp.values[a];
      for (int j = 1; j < static_cast<int>(n_lambdas); ++j)
        b += config_.cpc_bound * actions[a].lambdas[j];
      bids[a] = std::clamp(b, config_.bid_min, config_.bid_max);
      eligible[a] = bids[a] > 0.0;
      if (logged_advertiser_ >= 0 && a != logged_advertiser_)
        top_other = std::max(top_other, bids[a]);
    }
    if (logged_advertiser_ >= 0)
      impression_log_.emplace_back(imp.values[logged_advertiser_],
                                   std::min(top_other, config_.price_max));

    // Second-price with budget feasibility: a winner who cannot afford the
    // price is excluded and the auction re-resolved among the rest.
    for (;;) {
      int best = -1;
      double best_bid = 0.0, second = 0.0;
      for (int a = 0; a < n; ++a) {
        if (!eligible[a]) continue;
        if (bids[a] > best_bid) {
          second = best_bid;
          best_bid = bids[a];
          best = a;
        } else if (bids[a] > second) {
          second = bids[a];
        }
      }
      if (best < 0) break;
      const double price = std::min(second, config_.price_max);
      const double remaining = budgets_[best] - spent_total_[best] - result.cost[best];
      if (remaining >= price) {
        result.cost[best] += price;
        result.value[best] += imp.values[best];
        ++audit_.n_winners;
        const double gap = best_bid - price;
        if (audit_.n_winners == 1 || gap < audit_.min_bid_price_gap)
          audit_.min_bid_price_gap = gap;
        break;
      }
      eligible[best] = 0;
    }
    ++audit_.n_auctions;
  }

  for (int a = 0; a < n; ++a) {
    spent_total_[a] += result.cost[a];
    value_total_[a] += result.value[a];
    last_cost_[a] = result.cost[a];
    last_value_[a] = result.value[a];
  }
  ++period_;

  result.next_state.reserve(n);
  for (int a = 0; a < n; ++a) result.next_state.push_back(observed_state(a));
  return result;
}

std::vector<Trajectory> run_episode(Environment& env, const std::vector<Policy*>& policies) {
  const EnvConfig& cfg = env.config();
  const int n = cfg.n_advertisers;
  if (static_cast<int>(policies.size()) != n)
    fail(Errc::invalid_argument, "run_episode: one policy per advertiser required");

  std::vector<Trajectory> trajectories(n);
  std::vector<std::vector<BidState>> histories(n);
  for (int a = 0; a < n; ++a) {
    trajectories[a].budget = env.budgets()[a];
    trajectories[a].episode_seed = cfg.seed;
    trajectories[a].advertiser_id = a;
    if (cfg.n_constraints > 0)
      trajectories[a].constraint_bounds.assign(cfg.n_constraints, cfg.cpc_bound);
    trajectories[a].steps.reserve(cfg.T);
    histories[a].reserve(cfg.T);
    policies[a]->reset();
  }

  for (int t = 0; t < cfg.T; ++t) {
    std::vector<Action> actions(n);
    for (int a = 0; a < n; ++a) {
      histories[a].push_back(env.observed_state(a));
      actions[a] = policies[a]->act(histories[a]);
      if (!actions[a].finite())
        fail(Errc::policy_fault,
             "advertiser " + std::to_string(a) + " returned a non-finite lambda at period " +
                 std::to_string(t));
    }
    StepResult res = env.step(actions);
    for (int a = 0; a < n; ++a) {
      StepRecord rec;
      rec.state = histories[a][t];
      rec.action = actions[a];
      rec.reward = res.value[a];
      rec.cost = res.cost[a];
      trajectories[a].steps.push_back(std::move(rec));
    }
  }
  return trajectories;
}

std::uint64_t episode_digest(const std::vector<Trajectory>& trajectories) {
  Digest d;
  d.add(static_cast<std::uint64_t>(trajectories.size()));
  for (const auto& traj : trajectories) {
    d.add(traj.budget);
    d.add(static_cast<std::uint64_t>(traj.episode_seed));
    d.add(traj.advertiser_id);
    for (const auto& s : traj.steps) {
      for (double v : s.state.to_array()) d.add(v);
      for (double v : s.action.lambdas) d.add(v);
      d.add(s.reward);
      d.add(s.cost);
    }
  }
  return d.value();
}

}  // namespace bidgen

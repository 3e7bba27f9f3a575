#include "bidgen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bidgen/errors.hpp"
#include "bidgen/sampler.hpp"
#include "bidgen/util.hpp"

namespace bidgen {

GenerativePolicy::GenerativePolicy(const PolicyBundle& bundle, Options options)
    : bundle_(bundle), options_(std::move(options)), rng_(options_.seed) {
  bundle_.require_generation();
  if (!options_.condition.empty() &&
      options_.condition.size() != static_cast<std::size_t>(bundle_.conditions.layout.size()))
    fail(Errc::layout_mismatch, "GenerativePolicy: condition length != layout size");
  last_action_.lambdas.assign(bundle_.invdyn->config.action_dim, 0.0);
}

void GenerativePolicy::reset() {
  rng_ = Rng(options_.seed);
  plan_.clear();
  plan_period_ = -1;
  last_action_.lambdas.assign(bundle_.invdyn->config.action_dim, 0.0);
}

Action GenerativePolicy::act(const std::vector<BidState>& history) {
  const auto& dn = *bundle_.denoiser;
  const auto& schedule = *bundle_.schedule;
  const auto& inv = *bundle_.invdyn;
  const int T = dn.config.T;
  const int D = dn.config.D;
  const int t = static_cast<int>(history.size()) - 1;
  if (t < 0 || t >= T) fail(Errc::invalid_argument, "GenerativePolicy: bad history length");

  // Inpaint every observed state; the final period keeps one free row so a
  // target state still exists to aim for.
  const int h = std::min(t + 1, T - 1);
  const int target_row = std::min(t + 1, T - 1);

  const bool need_plan =
      plan_.empty() || plan_period_ < 0 || (t - plan_period_) >= options_.replan_every;
  if (need_plan) {
    std::vector<double> hist_norm;
    hist_norm.reserve(static_cast<std::size_t>(h) * D);
    for (int i = 0; i < h; ++i) {
      const auto row = normalize_state(history[i], bundle_.feature_stats);
      hist_norm.insert(hist_norm.end(), row.begin(), row.end());
    }
    SamplerConfig sc = bundle_.sampler;
    sc.omega = options_.omega;
    sc.temperature = options_.temperature;
    const double* y = options_.condition.empty() ? nullptr : options_.condition.data();
    try {
      plan_ = generate_trajectory(dn, schedule, hist_norm, h, y, sc, rng_);
      plan_period_ = t;
    } catch (const Error& e) {
      log_warn(std::string("generation failed, reusing last lambdas: ") + e.what());
      return last_action_;
    }
  }

  // Inverse dynamics runs on the real observed window plus the planned state.
  const int L = inv.config.L;
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>(L + 1) * D);
  for (int u = t - L; u <= t; ++u) {
    const int uu = std::max(u, 0);
    const auto row = normalize_state(history[uu], bundle_.feature_stats);
    window.insert(window.end(), row.begin(), row.end());
  }
  std::vector<double> next(plan_.begin() + static_cast<std::size_t>(target_row) * D,
                           plan_.begin() + static_cast<std::size_t>(target_row + 1) * D);

  last_action_ = predict_action(inv, window, next);
  return last_action_;
}

namespace {

EpisodeScore run_scored_episode(const PolicyFactory& make_policy, EnvConfig env_config,
                                const EvalConfig& eval_config,
                                const PacingAgentConfig& competitor, double budget,
                                std::uint64_t episode_seed,
                                Trajectory* target_trajectory) {
  EpisodeScore out;
  out.seed = episode_seed;
  try {
    env_config.seed = episode_seed;
    Environment env(env_config);
    const int target = eval_config.target_advertiser;
    if (target >= env_config.n_advertisers)
      fail(Errc::invalid_config, "evaluate: target_advertiser out of range");
    env.override_budget(target, budget);
    env.enable_impression_log(target);

    std::vector<PacingPolicy> pacers(env_config.n_advertisers, PacingPolicy(competitor));
    auto candidate = make_policy(episode_seed);
    std::vector<Policy*> policies(env_config.n_advertisers);
    for (int a = 0; a < env_config.n_advertisers; ++a) policies[a] = &pacers[a];
    policies[target] = candidate.get();

    auto trajectories = run_episode(env, policies);
    out.score = trajectories[target].total_return();

    const auto items = to_oracle_items(env.impression_log());
    out.oracle_value = hindsight_oracle(items, budget).total_value;
    out.oracle_ratio = out.oracle_value > 0.0 ? out.score / out.oracle_value : 0.0;
    if (target_trajectory) *target_trajectory = std::move(trajectories[target]);
  } catch (const Error& e) {
    log_warn("episode failed (seed " + std::to_string(episode_seed) + "): " + e.what());
    out.failed = true;
    out.score = 0.0;
  }
  return out;
}

}  // namespace

EvalOutcome evaluate_policy(const PolicyFactory& make_policy, EnvConfig env_config,
                            const EvalConfig& eval_config,
                            const PacingAgentConfig& competitor) {
  env_config.validate();
  eval_config.validate();
  competitor.validate();

  EvalOutcome outcome;
  for (std::size_t bi = 0; bi < eval_config.budgets.size(); ++bi) {
    const double budget = eval_config.budgets[bi];
    BudgetMetrics row;
    row.budget = budget;
    row.episodes.resize(eval_config.n_runs);
    std::vector<Trajectory> trajectories(eval_config.n_runs);

    parallel_chunks(
        eval_config.n_runs, std::max(1, eval_config.n_chunks),
        [&](std::size_t, std::size_t begin, std::size_t end) {
          for (std::size_t run = begin; run < end; ++run) {
            const std::uint64_t seed =
                derive_seed(eval_config.seed_base, bi * 1000003ULL + run);
            row.episodes[run] = run_scored_episode(make_policy, env_config, eval_config,
                                                   competitor, budget, seed,
                                                   &trajectories[run]);
          }
        });

    std::vector<double> scores;
    scores.reserve(row.episodes.size());
    double oracle_sum = 0.0, ratio_sum = 0.0;
    for (const auto& ep : row.episodes) {
      scores.push_back(ep.score);
      oracle_sum += ep.oracle_value;
      ratio_sum += ep.oracle_ratio;
      if (ep.failed) ++row.n_failed;
    }
    const double n = static_cast<double>(scores.size());
    row.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double var = 0.0;
    for (double s : scores) var += (s - row.mean) * (s - row.mean);
    row.stddev = std::sqrt(var / n);
    row.oracle_mean = oracle_sum / n;
    row.oracle_ratio = ratio_sum / n;

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const int k = std::min<int>(eval_config.top_k, static_cast<int>(sorted.size()));
    row.top_k_mean = std::accumulate(sorted.begin(), sorted.begin() + k, 0.0) / k;

    outcome.rows.push_back(std::move(row));
    for (auto& t : trajectories) outcome.target_trajectories.push_back(std::move(t));
  }
  return outcome;
}

EvalOutcome evaluate(const PolicyBundle& bundle, const EnvConfig& env_config,
                     const EvalConfig& eval_config, const PacingAgentConfig& competitor,
                     const std::vector<double>& condition) {
  bundle.require_generation();
  std::vector<double> y = condition;
  if (y.empty()) {
    // Layout defaults: best return, all indicators satisfied.
    y = compose_condition(std::nullopt, {}, bundle.conditions.layout).values;
  }
  const PolicyFactory factory = [&bundle, &eval_config, y](std::uint64_t episode_seed) {
    GenerativePolicy::Options opt;
    opt.condition = y;
    opt.omega = bundle.sampler.omega;
    opt.temperature = bundle.sampler.temperature;
    opt.replan_every = eval_config.replan_every;
    opt.seed = derive_seed(episode_seed, 0x9e11);
    return std::make_unique<GenerativePolicy>(bundle, opt);
  };
  return evaluate_policy(factory, env_config, eval_config, competitor);
}

double exceed_ratio(const std::vector<Trajectory>& trajectories, double c,
                    const CpcNormalizer& norm) {
  if (trajectories.empty()) fail(Errc::invalid_argument, "exceed_ratio: empty set");
  int exceeding = 0;
  for (const auto& traj : trajectories)
    if (cpc_statistic(traj, norm).value > c) ++exceeding;
  return static_cast<double>(exceeding) / static_cast<double>(trajectories.size());
}

PolicyBundle train_pipeline(const TrajectoryDataset& dataset, const ExperimentConfig& ex) {
  if (dataset.trajectories.empty()) fail(Errc::invalid_argument, "train_pipeline: empty dataset");

  const ConditionLayout layout = ConditionLayout::parse(ex.condition_layout);
  const ConditionContext ctx = build_condition_context(dataset, layout);
  const TrainSet set = build_train_set(dataset, ctx);

  DenoiserConfig model = ex.model;
  model.T = set.T;
  model.cond_dim = layout.size();

  const NoiseSchedule schedule =
      cosine_schedule(ex.diffusion_steps, ex.gamma, ex.cosine_squared);

  log_info("training denoiser: " + std::to_string(set.size()) + " trajectories, K=" +
           std::to_string(schedule.K) + ", params=" + std::to_string(model.param_count()));
  auto dn = train_denoiser(set, schedule, model, ex.train);

  InvDynConfig inv_cfg = ex.invdyn;
  inv_cfg.D = set.D;
  inv_cfg.action_dim = set.action_dim;
  log_info("training inverse dynamics: L=" + std::to_string(inv_cfg.L));
  auto inv = train_invdyn(set, inv_cfg.L, ex.invdyn_train, inv_cfg);

  PolicyBundle bundle;
  bundle.denoiser = std::move(dn.params);
  bundle.schedule = schedule;
  bundle.invdyn = std::move(inv.params);
  bundle.sampler = ex.sampler;
  bundle.conditions = ctx;
  bundle.feature_stats = dataset.feature_stats;
  return bundle;
}

std::vector<SweepRow> sweep(const std::string& axis, const std::vector<double>& values,
                            const ExperimentConfig& base, const TrajectoryDataset& dataset) {
  if (values.empty()) fail(Errc::invalid_argument, "sweep: values must be non-empty");
  if (axis != "diffusion_steps" && axis != "seeds" && axis != "omega")
    fail(Errc::invalid_argument, "sweep: axis must be diffusion_steps | seeds | omega");

  std::vector<SweepRow> rows;
  for (double value : values) {
    ExperimentConfig ex = base;
    if (axis == "diffusion_steps") {
      ex.diffusion_steps = static_cast<int>(value);
    } else if (axis == "seeds") {
      ex.train.seed = static_cast<std::uint64_t>(value);
      ex.invdyn_train.seed = derive_seed(static_cast<std::uint64_t>(value), 0x1d);
    } else {
      ex.sampler.omega = value;
    }

    try {
      const PolicyBundle bundle = train_pipeline(dataset, ex);
      const EvalOutcome outcome = evaluate(bundle, ex.env, ex.eval, ex.agent);
      for (const auto& r : outcome.rows) {
        SweepRow row;
        row.axis = axis;
        row.value = value;
        row.budget = r.budget;
        row.top_k_mean = r.top_k_mean;
        row.mean = r.mean;
        row.stddev = r.stddev;
        row.oracle_ratio = r.oracle_ratio;
        rows.push_back(std::move(row));
      }
    } catch (const Error& e) {
      SweepRow row;
      row.axis = axis;
      row.value = value;
      row.failed = true;
      row.error = e.what();
      rows.push_back(std::move(row));
      log_warn("sweep value " + format_double(value) + " failed: " + e.what());
    }
  }
  return rows;
}

}  // namespace bidgen

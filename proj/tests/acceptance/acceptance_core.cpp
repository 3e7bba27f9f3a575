// Fast property criteria: schedule, forward moments, gradients, guidance,
// inpainting, oracle agreement, simulator conservation, latency scaling.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <numeric>

#include "acceptance_common.hpp"
#include "bidgen/agents.hpp"
#include "bidgen/auction.hpp"
#include "bidgen/checkpoint.hpp"
#include "bidgen/denoiser.hpp"
#include "bidgen/eval.hpp"
#include "bidgen/invdyn.hpp"
#include "bidgen/oracle.hpp"
#include "bidgen/sampler.hpp"
#include "bidgen/schedule.hpp"

using namespace bidgen;
using acceptance::fmt;

namespace {

DenoiserConfig desk_config() {
  DenoiserConfig cfg;
  cfg.T = 96;
  cfg.D = 5;
  cfg.channels = {32, 64};
  cfg.cond_dim = 1;
  return cfg;
}

bool criterion_schedule(std::string& detail) {
  for (int K : {5, 10, 20, 30, 50}) {
    const NoiseSchedule s = cosine_schedule(K, 0.008);
    if (s.alpha_bar[0] != 1.0) {
      detail = fmt("alpha_bar[0] != 1 at K=%d", K);
      return false;
    }
    if (!(s.alpha_bar[K] < 1e-3)) {
      detail = fmt("alpha_bar[K]=%.3e not < 1e-3 at K=%d", s.alpha_bar[K], K);
      return false;
    }
    for (int k = 1; k <= K; ++k) {
      if (!(s.alpha_bar[k] < s.alpha_bar[k - 1])) {
        detail = fmt("not strictly decreasing at K=%d k=%d", K, k);
        return false;
      }
      if (std::abs(s.alpha[k] * s.alpha_bar[k - 1] - s.alpha_bar[k]) > 1e-12) {
        detail = fmt("product identity broken at K=%d k=%d", K, k);
        return false;
      }
    }
  }
  return true;
}

bool criterion_forward_moments(std::string& detail) {
  const NoiseSchedule s = cosine_schedule(20, 0.008);
  Rng rng(2024);
  const double x0 = 0.37;
  const int n = 10000;
  for (int k : {1, 5, 10, 15, 20}) {
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double eps = rng.normal();
      double xk;
      forward_sample(&x0, &eps, 1, k, s, &xk);
      sum += xk;
      sum2 += xk * xk;
    }
    const double mean = sum / n;
    const double var = (sum2 - n * mean * mean) / (n - 1);
    const double want_mean = std::sqrt(s.alpha_bar[k]) * x0;
    const double want_var = 1.0 - s.alpha_bar[k];
    const double se_mean = std::sqrt(want_var / n);
    const double se_var = want_var * std::sqrt(2.0 / (n - 1));
    if (std::abs(mean - want_mean) >= 3.0 * se_mean) {
      detail = fmt("mean off at k=%d: %.5f vs %.5f (3se=%.5f)", k, mean, want_mean,
                   3.0 * se_mean);
      return false;
    }
    if (std::abs(var - want_var) >= 3.0 * se_var) {
      detail = fmt("variance off at k=%d: %.5f vs %.5f (3se=%.5f)", k, var, want_var,
                   3.0 * se_var);
      return false;
    }
  }
  return true;
}

bool criterion_gradients(std::string& detail) {
  const DenoiserConfig cfg = desk_config();
  Rng rng(7);
  const auto params = init_denoiser(cfg, rng);
  const NoiseSchedule s = cosine_schedule(20, 0.008);
  DenoiserSample sample;
  sample.x0.resize(static_cast<std::size_t>(cfg.T) * cfg.D);
  sample.eps.resize(sample.x0.size());
  for (auto& v : sample.x0) v = rng.uniform(-1.0, 1.0);
  for (auto& v : sample.eps) v = rng.normal();
  sample.k = 11;
  sample.cond = {0.8};
  const double denoiser_err = finite_diff_check_denoiser(params, s, sample, 100, 1234);

  InvDynConfig icfg;
  icfg.L = 2;
  icfg.D = 5;
  icfg.hidden = 64;
  icfg.action_dim = 1;
  const auto iparams = init_invdyn(icfg, rng);
  InvDynSample isample;
  isample.window.resize(icfg.input_dim());
  for (auto& v : isample.window) v = rng.normal();
  isample.target = {3.0};
  const double invdyn_err = finite_diff_check_invdyn(iparams, isample, 100, 4321);

  detail = fmt("denoiser %.3e, invdyn %.3e", denoiser_err, invdyn_err);
  return denoiser_err < 1e-4 && invdyn_err < 1e-4;
}

bool criterion_guidance(std::string& detail) {
  const DenoiserConfig cfg = desk_config();
  Rng rng(11);
  const auto params = init_denoiser(cfg, rng);
  const std::size_t n = static_cast<std::size_t>(cfg.T) * cfg.D;
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> y = {0.9};

  const auto uncond = predict_noise(params, x, 3, nullptr);
  const auto cond = predict_noise(params, x, 3, y.data());
  const auto g0 = guided_epsilon(params, x, 3, y.data(), 0.0);
  const auto g1 = guided_epsilon(params, x, 3, y.data(), 1.0);
  if (g0 != uncond) {
    detail = "omega=0 does not collapse to the unconditional estimate";
    return false;
  }
  if (g1 != cond) {
    detail = "omega=1 does not collapse to the conditional estimate";
    return false;
  }
  const auto mid = guided_epsilon(params, x, 3, y.data(), 0.5);
  double max_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    max_dev = std::max(max_dev, std::abs(mid[i] - 0.5 * (g0[i] + g1[i])));
  detail = fmt("three-point deviation %.2e", max_dev);
  return max_dev <= 1e-12;
}

bool criterion_inpainting(std::string& detail) {
  const DenoiserConfig cfg = desk_config();
  Rng rng(13);
  const auto params = init_denoiser(cfg, rng);
  const NoiseSchedule s = cosine_schedule(20, 0.008);
  SamplerConfig sc;
  sc.omega = 0.2;
  for (int h : {1, 48, 95}) {
    std::vector<double> history(static_cast<std::size_t>(h) * cfg.D);
    Rng hr(500 + h);
    for (auto& v : history) v = hr.uniform(-1.0, 1.0);
    const std::vector<double> y = {1.0};
    Rng gen(9000 + h);
    const auto out = generate_trajectory(params, s, history, h, y.data(), sc, gen);
    for (std::size_t i = 0; i < history.size(); ++i) {
      if (out[i] != history[i]) {
        detail = fmt("row mismatch at h=%d flat index %zu", h, i);
        return false;
      }
    }
  }
  return true;
}

bool criterion_oracle(std::string& detail) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 12));
    const double cost = rng.uniform(0.2, 2.0);
    std::vector<OracleItem> items;
    for (int i = 0; i < n; ++i) items.push_back({rng.uniform(0.0, 1.0), cost});
    const double budget = rng.uniform(0.5, n * cost + 1.0);
    const double greedy = hindsight_oracle(items, budget).total_value;
    const double exact = brute_force_oracle(items, budget);
    if (std::abs(greedy - exact) > 1e-12) {
      detail = fmt("equal-cost mismatch at trial %d: %.12f vs %.12f", trial, greedy, exact);
      return false;
    }
  }
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 12;
    std::vector<OracleItem> items;
    double max_value = 0.0;
    for (int i = 0; i < n; ++i) {
      items.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.01, 1.5)});
      max_value = std::max(max_value, items.back().value);
    }
    const double budget = rng.uniform(0.5, 6.0);
    const double greedy = hindsight_oracle(items, budget).total_value;
    const double exact = brute_force_oracle(items, budget);
    if (greedy > exact + 1e-12 || greedy < exact - max_value - 1e-12) {
      detail = fmt("heterogeneous bound broken at trial %d: greedy %.6f exact %.6f max %.6f",
                   trial, greedy, exact, max_value);
      return false;
    }
  }
  return true;
}

bool criterion_conservation(std::string& detail) {
  // Property side: second-price never charges above the winning bid.
  Rng rng(19);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 10));
    std::vector<double> bids(n);
    for (auto& b : bids) b = rng.uniform() < 0.25 ? 0.0 : rng.uniform(0.0, 1000.0);
    Impression imp;
    imp.values.assign(n, 0.5);
    const auto out = run_auction(bids, imp);
    if (out.winner >= 0 && out.price > bids[out.winner] + 1e-12) {
      detail = fmt("price above winning bid at trial %d", trial);
      return false;
    }
  }

  // Episode side: reference defaults, 100 seeds; budget feasibility plus the
  // in-environment winner audit; determinism digests for a third of them.
  PacingAgentConfig agent;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EnvConfig cfg;  // reference-table defaults
    cfg.seed = seed;
    Environment env(cfg);
    std::vector<PacingPolicy> pacers(cfg.n_advertisers, PacingPolicy(agent));
    std::vector<Policy*> policies;
    for (auto& p : pacers) policies.push_back(&p);
    const auto trajectories = run_episode(env, policies);
    for (const auto& traj : trajectories) {
      if (traj.total_cost() > traj.budget + 1e-9) {
        detail = fmt("budget exceeded at seed %llu", static_cast<unsigned long long>(seed));
        return false;
      }
    }
    if (env.audit().n_winners > 0 && env.audit().min_bid_price_gap < -1e-12) {
      detail = fmt("auction charged above bid at seed %llu",
                   static_cast<unsigned long long>(seed));
      return false;
    }
    if (seed % 3 == 0) {
      EnvConfig cfg2 = cfg;
      Environment env2(cfg2);
      std::vector<PacingPolicy> pacers2(cfg.n_advertisers, PacingPolicy(agent));
      std::vector<Policy*> policies2;
      for (auto& p : pacers2) policies2.push_back(&p);
      const auto again = run_episode(env2, policies2);
      if (episode_digest(trajectories) != episode_digest(again)) {
        detail = fmt("digest not deterministic at seed %llu",
                     static_cast<unsigned long long>(seed));
        return false;
      }
    }
  }
  return true;
}

bool criterion_latency(std::string& detail) {
  // Per-period policy call latency on this thread, one CPU core, across K.
  Rng rng(23);
  std::vector<double> ks, times;
  double latency_at_20 = 0.0;
  for (int K : {5, 10, 20, 30, 50}) {
    DenoiserConfig cfg = desk_config();
    PolicyBundle bundle;
    Rng init_rng(100 + K);
    bundle.denoiser = init_denoiser(cfg, init_rng);
    bundle.schedule = cosine_schedule(K, 0.008);
    InvDynConfig icfg;
    icfg.L = 2;
    icfg.D = 5;
    icfg.hidden = 64;
    icfg.action_dim = 1;
    bundle.invdyn = init_invdyn(icfg, init_rng);
    bundle.conditions.layout = ConditionLayout::parse("return");
    for (int d = 0; d < BidState::kDim; ++d) {
      bundle.feature_stats.min[d] = 0.0;
      bundle.feature_stats.max[d] = 1.0;
    }

    GenerativePolicy::Options opt;
    opt.condition = {1.0};
    opt.omega = 0.2;  // both guidance branches per step
    opt.temperature = 0.5;
    opt.replan_every = 1;
    opt.seed = 5;
    GenerativePolicy policy(bundle, opt);

    std::vector<BidState> history;
    for (int t = 0; t < 48; ++t) {
      BidState s;
      s.remaining_time = 1.0 - t / 96.0;
      s.remaining_budget = 1.0 - 0.8 * t / 96.0;
      s.spend_speed = 0.01;
      s.realtime_cost_efficiency = 0.4;
      s.avg_cost_efficiency = 0.4;
      history.push_back(s);
    }

    policy.act(history);  // warm-up
    const int reps = 6;
    std::vector<double> samples;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      policy.act(history);
      samples.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const double median = samples[samples.size() / 2];
    ks.push_back(K);
    times.push_back(median);
    if (K == 20) latency_at_20 = median;
  }

  // Least-squares linear fit and its R^2.
  const double n = static_cast<double>(ks.size());
  const double mx = std::accumulate(ks.begin(), ks.end(), 0.0) / n;
  const double my = std::accumulate(times.begin(), times.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sxx += (ks[i] - mx) * (ks[i] - mx);
    sxy += (ks[i] - mx) * (times[i] - my);
    syy += (times[i] - my) * (times[i] - my);
  }
  const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  detail = fmt("K=20 median %.3f s, linear fit R^2 %.4f", latency_at_20, r2);
  return latency_at_20 < 0.5 && r2 >= 0.95;
}

}  // namespace

int main() {
  acceptance::Suite suite;
  suite.run(1, "noise-schedule correctness over the K grid", 1.0, criterion_schedule);
  suite.run(2, "forward-process Monte Carlo moments", 10.0, criterion_forward_moments);
  suite.run(3, "gradient correctness of both training losses", 30.0, criterion_gradients);
  suite.run(4, "guidance identities and affinity in omega", 0.0, criterion_guidance);
  suite.run(5, "history inpainting exactness", 0.0, criterion_inpainting);
  suite.run(8, "hindsight oracle agrees with brute force", 60.0, criterion_oracle);
  suite.run(9, "simulator conservation and determinism", 0.0, criterion_conservation);
  suite.run(13, "policy-call latency budget and linear scaling in K", 0.0, criterion_latency);
  return suite.exit_code();
}

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "bidgen/agents.hpp"
#include "bidgen/checkpoint.hpp"
#include "bidgen/config.hpp"
#include "bidgen/dataset.hpp"
#include "bidgen/errors.hpp"
#include "bidgen/eval.hpp"
#include "bidgen/exporter.hpp"
#include "bidgen/oracle.hpp"
#include "bidgen/sampler.hpp"
#include "bidgen/util.hpp"

namespace {

using namespace bidgen;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string log_level = "info";
};

ExperimentConfig load_experiment(const GlobalOptions& g) {
  ExperimentConfig ex = g.config_path.empty()
                            ? experiment_from_config(ParsedConfig::parse_string(""))
                            : load_experiment_config(g.config_path);
  if (g.seed) {
    ex.env.seed = *g.seed;
    ex.train.seed = *g.seed;
    ex.invdyn_train.seed = derive_seed(*g.seed, 0x1d);
    ex.eval.seed_base = *g.seed;
  }
  return ex;
}

std::string out_path(const GlobalOptions& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return (std::filesystem::path(g.out_dir) / name).string();
}

std::vector<double> parse_condition_arg(const std::string& text, const ConditionLayout& layout) {
  if (text.empty()) return compose_condition(std::nullopt, {}, layout).values;
  std::optional<double> ret;
  std::map<std::string, double> indicators;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      fail(Errc::invalid_argument, "condition must be name=value pairs: '" + item + "'");
    const std::string name = item.substr(0, eq);
    const double value = std::stod(item.substr(eq + 1));
    if (name == "return")
      ret = value;
    else
      indicators[name] = value;
  }
  return compose_condition(ret, indicators, layout).values;
}

std::vector<BidState> read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open history file '" + path + "'");
  std::vector<BidState> states;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::array<double, BidState::kDim> row{};
    std::string cell;
    bool numeric = true;
    for (int d = 0; d < BidState::kDim && std::getline(ss, cell, ','); ++d) {
      try {
        row[d] = std::stod(cell);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // header row
    states.push_back(BidState::from_array(row));
  }
  if (states.empty()) fail(Errc::invalid_argument, "history file holds no state rows");
  return states;
}

int cmd_collect(const GlobalOptions& g, int n, double sigma, const std::string& env_config,
                const std::string& out) {
  ExperimentConfig ex = load_experiment(g);
  if (!env_config.empty()) ex.env = load_env_config(env_config);
  if (n > 0) ex.n_trajectories = n;
  if (sigma >= 0.0) ex.explore_sigma = sigma;

  CollectOptions opts;
  opts.seed_base = g.seed.value_or(ex.env.seed);
  log_info("collecting " + std::to_string(ex.n_trajectories) + " trajectories (sigma=" +
           format_double(ex.explore_sigma) + ")");
  const auto ds = collect_dataset(ex.env, ex.agent, ex.n_trajectories, ex.explore_sigma, opts);
  dataset_save(ds, out);
  std::printf("wrote %zu trajectories to %s (returns %.2f..%.2f)\n", ds.size(), out.c_str(),
              ds.return_stats.r_min, ds.return_stats.r_max);
  return 0;
}

int cmd_train_diffusion(const GlobalOptions& g, const std::string& data,
                        const std::string& out) {
  const ExperimentConfig ex = load_experiment(g);
  const auto ds = dataset_load(data);

  const auto layout = ConditionLayout::parse(ex.condition_layout);
  const auto ctx = build_condition_context(ds, layout);
  const auto set = build_train_set(ds, ctx);

  DenoiserConfig model = ex.model;
  model.T = set.T;
  model.cond_dim = layout.size();
  const NoiseSchedule schedule =
      cosine_schedule(ex.diffusion_steps, ex.gamma, ex.cosine_squared);

  log_info("training denoiser on " + std::to_string(set.size()) + " trajectories, " +
           std::to_string(model.param_count()) + " parameters");
  auto result = train_denoiser(set, schedule, model, ex.train);

  PolicyBundle bundle;
  bundle.denoiser = std::move(result.params);
  bundle.schedule = schedule;
  bundle.sampler = ex.sampler;
  bundle.conditions = ctx;
  bundle.feature_stats = ds.feature_stats;
  save_bundle(bundle, out);
  std::printf("wrote denoiser checkpoint to %s (final loss %.4f)\n", out.c_str(),
              result.loss_history.back());
  return 0;
}

int cmd_train_invdyn(const GlobalOptions& g, const std::string& data,
                     const std::string& checkpoint, const std::string& out) {
  const ExperimentConfig ex = load_experiment(g);
  const auto ds = dataset_load(data);
  PolicyBundle bundle = load_bundle(checkpoint);

  // Freeze normalization and labeling exactly as the diffusion model saw them.
  const auto set = build_train_set(ds, bundle.conditions, bundle.feature_stats);
  InvDynConfig cfg = ex.invdyn;
  cfg.D = set.D;
  cfg.action_dim = set.action_dim;
  auto result = train_invdyn(set, cfg.L, ex.invdyn_train, cfg);
  bundle.invdyn = std::move(result.params);

  const std::string dest = out.empty() ? checkpoint : out;
  save_bundle(bundle, dest);
  std::printf("wrote inverse-dynamics weights to %s (final loss %.4f)\n", dest.c_str(),
              result.loss_history.back());
  return 0;
}

int cmd_generate(const std::string& checkpoint, const std::string& history_csv,
                 const std::string& condition, double omega, double temperature,
                 std::uint64_t seed, const std::string& out_csv) {
  const PolicyBundle bundle = load_bundle(checkpoint);
  if (!bundle.denoiser || !bundle.schedule)
    fail(Errc::invalid_argument, "checkpoint lacks a denoiser section");

  const auto history_raw = read_history_csv(history_csv);
  const int T = bundle.denoiser->config.T;
  if (static_cast<int>(history_raw.size()) >= T)
    fail(Errc::invalid_argument, "history must be shorter than the horizon T");

  std::vector<double> history_norm;
  for (const auto& s : history_raw) {
    const auto row = normalize_state(s, bundle.feature_stats);
    history_norm.insert(history_norm.end(), row.begin(), row.end());
  }

  SamplerConfig sc = bundle.sampler;
  if (!std::isnan(omega)) sc.omega = omega;
  if (!std::isnan(temperature)) sc.temperature = temperature;
  const auto y = parse_condition_arg(condition, bundle.conditions.layout);

  Rng rng(seed);
  const auto plan =
      generate_trajectory(*bundle.denoiser, *bundle.schedule, history_norm,
                          static_cast<int>(history_raw.size()), y.data(), sc, rng);

  std::ofstream outf(out_csv, std::ios::trunc);
  if (!outf) fail(Errc::io_error, "cannot open '" + out_csv + "'");
  outf << "period,source,remaining_time,remaining_budget,spend_speed,"
          "realtime_cost_efficiency,avg_cost_efficiency\n";
  const int D = BidState::kDim;
  for (int t = 0; t < T; ++t) {
    const BidState s = denormalize_state(plan.data() + static_cast<std::size_t>(t) * D,
                                         bundle.feature_stats);
    outf << t << ',' << (t < static_cast<int>(history_raw.size()) ? "history" : "generated");
    for (double v : s.to_array()) outf << ',' << format_double(v);
    outf << '\n';
  }
  std::printf("wrote %d-step trajectory to %s\n", T, out_csv.c_str());
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const std::string& checkpoint,
                 const std::string& invdyn_path, const std::string& out_csv,
                 const std::string& curves_dir, const std::string& condition) {
  const ExperimentConfig ex = load_experiment(g);
  PolicyBundle bundle = load_bundle(checkpoint);
  if (!invdyn_path.empty()) merge_invdyn(bundle, load_bundle(invdyn_path));
  bundle.require_generation();

  const std::vector<double> y =
      condition.empty() ? std::vector<double>{}
                        : parse_condition_arg(condition, bundle.conditions.layout);
  const EvalOutcome outcome = evaluate(bundle, ex.env, ex.eval, ex.agent, y);

  std::printf("%10s %12s %12s %10s %12s %12s %8s\n", "budget", "top_k_mean", "mean", "std",
              "oracle", "oracle_ratio", "failed");
  for (const auto& r : outcome.rows)
    std::printf("%10.0f %12.2f %12.2f %10.2f %12.2f %12.4f %8d\n", r.budget, r.top_k_mean,
                r.mean, r.stddev, r.oracle_mean, r.oracle_ratio, r.n_failed);

  if (!out_csv.empty()) {
    write_metrics_csv(outcome.rows, out_csv);
    std::printf("wrote metrics to %s\n", out_csv.c_str());
  }
  if (!curves_dir.empty()) {
    const auto exported = export_curves(outcome.target_trajectories, curves_dir, true);
    std::printf("wrote %zu curve files to %s (completion %.2f)\n", exported.files.size(),
                curves_dir.c_str(), exported.completion_fraction);
  }
  return 0;
}

int cmd_oracle(const GlobalOptions& g, const std::string& env_config, int n_seeds,
               int advertiser, const std::string& out_csv) {
  ExperimentConfig ex = load_experiment(g);
  if (!env_config.empty()) ex.env = load_env_config(env_config);

  std::vector<OracleRow> rows;
  for (int i = 0; i < n_seeds; ++i) {
    EnvConfig env_cfg = ex.env;
    env_cfg.seed = derive_seed(ex.eval.seed_base, i);
    Environment env(env_cfg);
    env.enable_impression_log(advertiser);
    std::vector<PacingPolicy> pacers(env_cfg.n_advertisers, PacingPolicy(ex.agent));
    std::vector<Policy*> policies;
    for (auto& p : pacers) policies.push_back(&p);
    run_episode(env, policies);

    const auto items = to_oracle_items(env.impression_log());
    const auto res = hindsight_oracle(items, env.budgets()[advertiser]);
    rows.push_back({env_cfg.seed, advertiser, res.total_value, res.total_cost,
                    res.lambda_star});
  }
  write_oracle_csv(rows, out_csv);
  std::printf("wrote %zu oracle rows to %s\n", rows.size(), out_csv.c_str());
  return 0;
}

int cmd_sweep(const GlobalOptions& g, const std::string& axis, const std::string& values_csv,
              const std::string& data, const std::string& out_csv) {
  const ExperimentConfig ex = load_experiment(g);
  std::vector<double> values;
  std::stringstream ss(values_csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));

  const auto ds = dataset_load(data);
  const auto rows = sweep(axis, values, ex, ds);
  write_sweep_csv(rows, out_csv);

  if (axis == "seeds") {
    // Stability summary: score variance across seeds per budget.
    std::map<double, std::vector<double>> by_budget;
    for (const auto& r : rows)
      if (!r.failed) by_budget[r.budget].push_back(r.top_k_mean);
    for (const auto& [budget, scores] : by_budget) {
      double mean = 0.0;
      for (double s : scores) mean += s;
      mean /= scores.size();
      double var = 0.0;
      for (double s : scores) var += (s - mean) * (s - mean);
      var /= scores.size();
      std::printf("budget %.0f: score mean %.2f variance %.2f over %zu seeds\n", budget, mean,
                  var, scores.size());
    }
  }
  std::printf("wrote %zu sweep rows to %s\n", rows.size(), out_csv.c_str());
  return 0;
}

int cmd_export(const std::string& data, const std::string& dir, bool svg) {
  const auto ds = dataset_load(data);
  const auto result = export_curves(ds.trajectories, dir, svg);
  std::printf("wrote %zu files to %s; %.1f%% of episodes spent >= 80%% of budget\n",
              result.files.size(), dir.c_str(), 100.0 * result.completion_fraction);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generative auto-bidding laboratory"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed_arg = 0;
  auto* seed_opt = app.add_option("--seed", seed_arg, "override seeds across stages");
  app.add_option("--config", g.config_path, "experiment config file");
  app.add_option("--out-dir", g.out_dir, "base directory for outputs");
  app.add_option("--log-level", g.log_level, "debug|info|warn|error|off");

  auto* collect = app.add_subcommand("collect", "run episodes and store bidding logs");
  int collect_n = 0;
  double collect_sigma = -1.0;
  std::string collect_env, collect_out = "dataset.jsonl";
  collect->add_option("--n", collect_n, "number of trajectories");
  collect->add_option("--sigma", collect_sigma, "exploration noise");
  collect->add_option("--env-config", collect_env, "environment config file");
  collect->add_option("--out", collect_out, "output dataset path");

  auto* traind = app.add_subcommand("train-diffusion", "train the state-trajectory denoiser");
  std::string traind_data, traind_out = "model.ckpt";
  traind->add_option("--data", traind_data, "dataset path")->required();
  traind->add_option("--out", traind_out, "checkpoint path");

  auto* traini = app.add_subcommand("train-invdyn", "train the action head");
  std::string traini_data, traini_ckpt, traini_out;
  traini->add_option("--data", traini_data, "dataset path")->required();
  traini->add_option("--checkpoint", traini_ckpt, "existing checkpoint")->required();
  traini->add_option("--out", traini_out, "output checkpoint (default: in place)");

  auto* gen = app.add_subcommand("generate", "generate future states from a history");
  std::string gen_ckpt, gen_hist, gen_cond, gen_out = "generated.csv";
  double gen_omega = std::nan("");
  double gen_temp = std::nan("");
  std::uint64_t gen_seed = 0;
  gen->add_option("--checkpoint", gen_ckpt)->required();
  gen->add_option("--history-csv", gen_hist)->required();
  gen->add_option("--condition", gen_cond, "e.g. return=1,cpc_ok=1");
  gen->add_option("--omega", gen_omega, "guidance scale");
  gen->add_option("--temperature", gen_temp, "sampling temperature");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out-csv", gen_out);

  auto* ev = app.add_subcommand("evaluate", "score the policy against pacing competitors");
  std::string ev_ckpt, ev_invdyn, ev_out, ev_curves, ev_cond;
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--invdyn", ev_invdyn, "separate inverse-dynamics checkpoint");
  ev->add_option("--out-csv", ev_out);
  ev->add_option("--curves-dir", ev_curves);
  ev->add_option("--condition", ev_cond, "override the generation condition");

  auto* orc = app.add_subcommand("oracle", "hindsight optimum per seeded episode");
  std::string orc_env, orc_out = "oracle.csv";
  int orc_seeds = 10, orc_adv = 0;
  orc->add_option("--env-config", orc_env);
  orc->add_option("--seeds", orc_seeds, "number of seeded episodes");
  orc->add_option("--advertiser", orc_adv);
  orc->add_option("--out", orc_out);

  auto* sw = app.add_subcommand("sweep", "train+evaluate across an axis");
  std::string sw_axis, sw_values, sw_data, sw_out = "sweep.csv";
  sw->add_option("--axis", sw_axis, "diffusion_steps|seeds|omega")->required();
  sw->add_option("--values", sw_values, "comma-separated values")->required();
  sw->add_option("--data", sw_data, "dataset path")->required();
  sw->add_option("--out", sw_out);

  auto* exp = app.add_subcommand("export", "CSV/SVG curves from a dataset");
  std::string exp_data, exp_dir = "curves";
  bool exp_svg = false;
  exp->add_option("--data", exp_data)->required();
  exp->add_option("--out-dir", exp_dir);
  exp->add_flag("--svg", exp_svg, "also write an SVG chart");

  CLI11_PARSE(app, argc, argv);

  try {
    set_log_level(g.log_level);
    if (seed_opt->count() > 0) g.seed = seed_arg;

    if (collect->parsed())
      return cmd_collect(g, collect_n, collect_sigma, collect_env, out_path(g, collect_out));
    if (traind->parsed()) return cmd_train_diffusion(g, traind_data, out_path(g, traind_out));
    if (traini->parsed()) return cmd_train_invdyn(g, traini_data, traini_ckpt, traini_out);
    if (gen->parsed())
      return cmd_generate(gen_ckpt, gen_hist, gen_cond, gen_omega, gen_temp, gen_seed,
                          out_path(g, gen_out));
    if (ev->parsed()) return cmd_evaluate(g, ev_ckpt, ev_invdyn, ev_out, ev_curves, ev_cond);
    if (orc->parsed()) return cmd_oracle(g, orc_env, orc_seeds, orc_adv, out_path(g, orc_out));
    if (sw->parsed()) return cmd_sweep(g, sw_axis, sw_values, sw_data, out_path(g, sw_out));
    if (exp->parsed()) return cmd_export(exp_data, exp_dir, exp_svg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

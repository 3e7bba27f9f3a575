#include "bidgen/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bidgen/errors.hpp"

namespace bidgen {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(Errc::invalid_config,
         "config [" + section + "] " + key + ": cannot parse '" + value + "' as number");
  }
}

}  // namespace

ParsedConfig ParsedConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

ParsedConfig ParsedConfig::parse_string(const std::string& text) {
  ParsedConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(Errc::invalid_config, "config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::invalid_config,
           "config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      fail(Errc::invalid_config, "config line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

bool ParsedConfig::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string ParsedConfig::get_string(const std::string& section, const std::string& key,
                                     const std::string& fallback) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return fallback;
  const auto kit = it->second.find(key);
  return kit == it->second.end() ? fallback : kit->second;
}

double ParsedConfig::get_double(const std::string& section, const std::string& key,
                                double fallback) const {
  if (!has(section, key)) return fallback;
  return parse_double(section, key, get_string(section, key, ""));
}

int ParsedConfig::get_int(const std::string& section, const std::string& key,
                          int fallback) const {
  if (!has(section, key)) return fallback;
  const double v = parse_double(section, key, get_string(section, key, ""));
  return static_cast<int>(v);
}

std::uint64_t ParsedConfig::get_u64(const std::string& section, const std::string& key,
                                    std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get_string(section, key, "");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    fail(Errc::invalid_config, "config [" + section + "] " + key + ": bad unsigned '" + s + "'");
  }
}

bool ParsedConfig::get_bool(const std::string& section, const std::string& key,
                            bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string s = get_string(section, key, "");
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(Errc::invalid_config, "config [" + section + "] " + key + ": bad bool '" + s + "'");
}

std::vector<double> ParsedConfig::get_doubles(const std::string& section,
                                              const std::string& key,
                                              const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(get_string(section, key, "")))
    out.push_back(parse_double(section, key, item));
  return out;
}

std::vector<int> ParsedConfig::get_ints(const std::string& section, const std::string& key,
                                        const std::vector<int>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<int> out;
  for (double v : get_doubles(section, key, {})) out.push_back(static_cast<int>(v));
  return out;
}

void ParsedConfig::check_known_keys(const std::string& section,
                                    const std::vector<std::string>& allowed) const {
  const auto it = sections_.find(section);
  if (it == sections_.end()) return;
  for (const auto& [key, _] : it->second) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(Errc::invalid_config, "config [" + section + "]: unknown key '" + key + "'");
  }
}

void EvalConfig::validate() const {
  if (budgets.empty()) fail(Errc::invalid_config, "eval: budgets must be non-empty");
  for (double b : budgets)
    if (!(b > 0.0)) fail(Errc::invalid_config, "eval: budgets must be positive");
  if (n_runs < 1) fail(Errc::invalid_config, "eval: n_runs must be >= 1");
  if (top_k < 1 || top_k > n_runs)
    fail(Errc::invalid_config, "eval: need 1 <= top_k <= n_runs");
  if (target_advertiser < 0) fail(Errc::invalid_config, "eval: target_advertiser must be >= 0");
  if (replan_every < 1) fail(Errc::invalid_config, "eval: replan_every must be >= 1");
  if (n_chunks < 1) fail(Errc::invalid_config, "eval: n_chunks must be >= 1");
}

namespace {

EnvConfig env_from(const ParsedConfig& cfg, const std::string& section) {
  cfg.check_known_keys(
      section, {"preset", "n_advertisers", "T", "n_min", "n_max", "budget_min", "budget_max",
                "bid_min", "bid_max", "value_max", "price_max", "seed", "n_constraints",
                "cpc_bound", "value_mu", "value_sigma", "scale_lo", "scale_hi"});
  EnvConfig env;
  const std::string preset = cfg.get_string(section, "preset", "table");
  if (preset == "wide") env = EnvConfig::wide_traffic_preset();
  else if (preset != "table")
    fail(Errc::invalid_config, "env preset must be 'table' or 'wide'");
  env.n_advertisers = cfg.get_int(section, "n_advertisers", env.n_advertisers);
  env.T = cfg.get_int(section, "T", env.T);
  env.n_min = cfg.get_int(section, "n_min", env.n_min);
  env.n_max = cfg.get_int(section, "n_max", env.n_max);
  env.budget_min = cfg.get_double(section, "budget_min", env.budget_min);
  env.budget_max = cfg.get_double(section, "budget_max", env.budget_max);
  env.bid_min = cfg.get_double(section, "bid_min", env.bid_min);
  env.bid_max = cfg.get_double(section, "bid_max", env.bid_max);
  env.value_max = cfg.get_double(section, "value_max", env.value_max);
  env.price_max = cfg.get_double(section, "price_max", env.price_max);
  env.seed = cfg.get_u64(section, "seed", env.seed);
  env.n_constraints = cfg.get_int(section, "n_constraints", env.n_constraints);
  env.cpc_bound = cfg.get_double(section, "cpc_bound", env.cpc_bound);
  env.value_mu = cfg.get_double(section, "value_mu", env.value_mu);
  env.value_sigma = cfg.get_double(section, "value_sigma", env.value_sigma);
  env.scale_lo = cfg.get_double(section, "scale_lo", env.scale_lo);
  env.scale_hi = cfg.get_double(section, "scale_hi", env.scale_hi);
  env.validate();
  return env;
}

}  // namespace

EnvConfig load_env_config(const std::string& path) {
  const ParsedConfig cfg = ParsedConfig::parse_file(path);
  // Accept both a bare key-value file and an [env] section.
  const std::string section = cfg.sections().count("env") ? "env" : "";
  return env_from(cfg, section);
}

ExperimentConfig experiment_from_config(const ParsedConfig& cfg) {
  ExperimentConfig ex;
  ex.env = env_from(cfg, cfg.sections().count("env") ? "env" : "");

  cfg.check_known_keys("agent", {"lambda_init", "gain", "lambda_lo", "lambda_hi",
                                 "explore_sigma", "n_trajectories"});
  ex.agent.lambda_init = cfg.get_double("agent", "lambda_init", ex.agent.lambda_init);
  ex.agent.gain = cfg.get_double("agent", "gain", ex.agent.gain);
  ex.agent.lambda_lo = cfg.get_double("agent", "lambda_lo", ex.agent.lambda_lo);
  ex.agent.lambda_hi = cfg.get_double("agent", "lambda_hi", ex.agent.lambda_hi);
  ex.agent.validate();
  ex.explore_sigma = cfg.get_double("agent", "explore_sigma", ex.explore_sigma);
  ex.n_trajectories = cfg.get_int("agent", "n_trajectories", ex.n_trajectories);

  cfg.check_known_keys(
      "model", {"diffusion_steps", "gamma", "cosine_squared", "n_blocks", "channels",
                "embed_dim", "embed_hidden", "dropout_p", "kernel_size", "gn_groups", "lr",
                "batch_frac", "epochs", "ema_period", "ema_decay", "seed", "grad_chunks"});
  ex.diffusion_steps = cfg.get_int("model", "diffusion_steps", ex.diffusion_steps);
  ex.gamma = cfg.get_double("model", "gamma", ex.gamma);
  ex.cosine_squared = cfg.get_bool("model", "cosine_squared", ex.cosine_squared);
  ex.model.T = ex.env.T;
  ex.model.n_blocks = cfg.get_int("model", "n_blocks", ex.model.n_blocks);
  ex.model.channels = cfg.get_ints("model", "channels", ex.model.channels);
  ex.model.embed_dim = cfg.get_int("model", "embed_dim", ex.model.embed_dim);
  ex.model.embed_hidden = cfg.get_int("model", "embed_hidden", ex.model.embed_hidden);
  ex.model.dropout_p = cfg.get_double("model", "dropout_p", ex.model.dropout_p);
  ex.model.kernel_size = cfg.get_int("model", "kernel_size", ex.model.kernel_size);
  ex.model.gn_groups = cfg.get_int("model", "gn_groups", ex.model.gn_groups);
  ex.train.lr = cfg.get_double("model", "lr", ex.train.lr);
  ex.train.batch_frac = cfg.get_double("model", "batch_frac", ex.train.batch_frac);
  ex.train.epochs = cfg.get_int("model", "epochs", ex.train.epochs);
  ex.train.ema_period = cfg.get_int("model", "ema_period", ex.train.ema_period);
  ex.train.ema_decay = cfg.get_double("model", "ema_decay", ex.train.ema_decay);
  ex.train.seed = cfg.get_u64("model", "seed", ex.train.seed);
  ex.train.grad_chunks = cfg.get_int("model", "grad_chunks", ex.train.grad_chunks);

  cfg.check_known_keys("invdyn", {"L", "hidden", "lambda_max", "lr", "batch_size", "epochs",
                                  "seed", "grad_chunks"});
  ex.invdyn.L = cfg.get_int("invdyn", "L", ex.invdyn.L);
  ex.invdyn.hidden = cfg.get_int("invdyn", "hidden", ex.invdyn.hidden);
  ex.invdyn.lambda_max = cfg.get_double("invdyn", "lambda_max", ex.invdyn.lambda_max);
  ex.invdyn_train.lr = cfg.get_double("invdyn", "lr", ex.invdyn_train.lr);
  ex.invdyn_train.batch_size = cfg.get_int("invdyn", "batch_size", ex.invdyn_train.batch_size);
  ex.invdyn_train.epochs = cfg.get_int("invdyn", "epochs", ex.invdyn_train.epochs);
  ex.invdyn_train.seed = cfg.get_u64("invdyn", "seed", ex.invdyn_train.seed);
  ex.invdyn_train.grad_chunks = cfg.get_int("invdyn", "grad_chunks", ex.invdyn_train.grad_chunks);

  cfg.check_known_keys("sampler", {"omega", "temperature", "unit_prior", "noised_history",
                                   "clip_x0", "x0_max"});
  ex.sampler.omega = cfg.get_double("sampler", "omega", ex.sampler.omega);
  ex.sampler.temperature = cfg.get_double("sampler", "temperature", ex.sampler.temperature);
  ex.sampler.unit_prior = cfg.get_bool("sampler", "unit_prior", ex.sampler.unit_prior);
  ex.sampler.noised_history = cfg.get_bool("sampler", "noised_history", ex.sampler.noised_history);
  ex.sampler.clip_x0 = cfg.get_bool("sampler", "clip_x0", ex.sampler.clip_x0);
  ex.sampler.x0_max = cfg.get_double("sampler", "x0_max", ex.sampler.x0_max);
  ex.sampler.validate();

  cfg.check_known_keys("conditions", {"layout"});
  ex.condition_layout = cfg.get_string("conditions", "layout", ex.condition_layout);
  ConditionLayout::parse(ex.condition_layout);  // early validation
  ex.model.cond_dim = ConditionLayout::parse(ex.condition_layout).size();

  cfg.check_known_keys("eval", {"budgets", "n_runs", "top_k", "target_advertiser",
                                "seed_base", "replan_every", "n_chunks"});
  ex.eval.budgets = cfg.get_doubles("eval", "budgets", ex.eval.budgets);
  ex.eval.n_runs = cfg.get_int("eval", "n_runs", ex.eval.n_runs);
  ex.eval.top_k = cfg.get_int("eval", "top_k", ex.eval.top_k);
  ex.eval.target_advertiser = cfg.get_int("eval", "target_advertiser", ex.eval.target_advertiser);
  ex.eval.seed_base = cfg.get_u64("eval", "seed_base", ex.eval.seed_base);
  ex.eval.replan_every = cfg.get_int("eval", "replan_every", ex.eval.replan_every);
  ex.eval.n_chunks = cfg.get_int("eval", "n_chunks", ex.eval.n_chunks);
  ex.eval.validate();

  ex.model.validate();
  return ex;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_from_config(ParsedConfig::parse_file(path));
}

}  // namespace bidgen

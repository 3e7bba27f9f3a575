#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bidgen/config.hpp"
#include "bidgen/errors.hpp"

using namespace bidgen;

namespace {
std::string write_temp(const char* name, const std::string& text) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::trunc);
  out << text;
  return path;
}
}  // namespace

TEST_CASE("key-value parsing with sections, comments and lists") {
  const auto cfg = ParsedConfig::parse_string(
      "# top comment\n"
      "plain = 1\n"
      "[env]\n"
      "n_advertisers = 12   # trailing comment\n"
      "budgets = 1, 2.5, 3\n"
      "flag = true\n");
  CHECK(cfg.get_int("", "plain", 0) == 1);
  CHECK(cfg.get_int("env", "n_advertisers", 0) == 12);
  CHECK(cfg.get_doubles("env", "budgets", {}) == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(cfg.get_bool("env", "flag", false));
  CHECK(cfg.get_int("env", "missing", 7) == 7);
}

TEST_CASE("malformed lines are rejected") {
  CHECK_THROWS_AS(ParsedConfig::parse_string("just a line\n"), Error);
  CHECK_THROWS_AS(ParsedConfig::parse_string("[unclosed\n"), Error);
  CHECK_THROWS_AS(ParsedConfig::parse_string("= value\n"), Error);
  CHECK_THROWS_AS(ParsedConfig::parse_string("[env]\nn_min = fifty\n").get_int("env", "n_min", 0),
                  Error);
}

TEST_CASE("unknown keys in known sections are typo-guarded") {
  const auto path = write_temp("bidgen_env_typo.cfg", "[env]\nn_advertizers = 3\n");
  CHECK_THROWS_AS(load_env_config(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("env config accepts flat files and [env] sections") {
  const auto flat = write_temp("bidgen_env_flat.cfg",
                               "n_advertisers = 4\nT = 8\nn_min = 5\nn_max = 9\nseed = 3\n");
  const EnvConfig a = load_env_config(flat);
  CHECK(a.n_advertisers == 4);
  CHECK(a.T == 8);
  CHECK(a.seed == 3);
  std::remove(flat.c_str());

  const auto sectioned =
      write_temp("bidgen_env_sect.cfg", "[env]\npreset = wide\nbudget_min = 1500\n");
  const EnvConfig b = load_env_config(sectioned);
  CHECK(b.n_min == 100);  // wide preset
  CHECK(b.n_max == 500);
  CHECK(b.budget_min == 1500.0);
  std::remove(sectioned.c_str());
}

TEST_CASE("experiment config defaults to the reference settings") {
  const auto ex = experiment_from_config(ParsedConfig::parse_string(""));
  CHECK(ex.env.n_advertisers == 30);
  CHECK(ex.env.T == 96);
  CHECK(ex.diffusion_steps == 20);
  CHECK(ex.gamma == 0.008);
  CHECK(ex.model.channels == std::vector<int>{32, 64});
  CHECK(ex.model.dropout_p == 0.2);
  CHECK(ex.train.lr == 1e-4);
  CHECK(ex.train.epochs == 500);
  CHECK(ex.train.ema_period == 4);
  CHECK(ex.sampler.omega == 0.2);
  CHECK(ex.sampler.temperature == 0.5);
  CHECK(ex.eval.budgets == std::vector<double>{1500.0, 2000.0, 2500.0, 3000.0});
  CHECK(ex.eval.n_runs == 50);
  CHECK(ex.eval.top_k == 5);
  CHECK(ex.condition_layout == "return");
  CHECK(ex.model.cond_dim == 1);
}

TEST_CASE("experiment config wires sections through") {
  const auto ex = experiment_from_config(ParsedConfig::parse_string(
      "[env]\nn_advertisers = 10\nT = 24\n"
      "[agent]\nlambda_init = 5\nexplore_sigma = 0.4\nn_trajectories = 64\n"
      "[model]\ndiffusion_steps = 10\nchannels = 16, 32\nepochs = 50\n"
      "[invdyn]\nL = 3\nhidden = 32\n"
      "[sampler]\nomega = 1.5\ntemperature = 0.25\n"
      "[conditions]\nlayout = return,cpc_ok\n"
      "[eval]\nbudgets = 1500, 2000\nn_runs = 4\ntop_k = 2\nreplan_every = 4\n"));
  CHECK(ex.env.n_advertisers == 10);
  CHECK(ex.model.T == 24);  // bound to the env horizon
  CHECK(ex.agent.lambda_init == 5.0);
  CHECK(ex.explore_sigma == 0.4);
  CHECK(ex.n_trajectories == 64);
  CHECK(ex.diffusion_steps == 10);
  CHECK(ex.model.channels == std::vector<int>{16, 32});
  CHECK(ex.invdyn.L == 3);
  CHECK(ex.sampler.omega == 1.5);
  CHECK(ex.model.cond_dim == 2);
  CHECK(ex.eval.budgets == std::vector<double>{1500.0, 2000.0});
  CHECK(ex.eval.replan_every == 4);
}

TEST_CASE("eval config validation") {
  EvalConfig bad;
  bad.top_k = 100;
  bad.n_runs = 5;
  CHECK_THROWS_AS(bad.validate(), Error);
  EvalConfig neg;
  neg.budgets = {-5.0};
  CHECK_THROWS_AS(neg.validate(), Error);
}

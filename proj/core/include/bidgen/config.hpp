#pragma once

#include <map>
#include <string>
#include <vector>

#include "bidgen/agents.hpp"
#include "bidgen/auction.hpp"
#include "bidgen/conditions.hpp"
#include "bidgen/denoiser.hpp"
#include "bidgen/invdyn.hpp"
#include "bidgen/sampler.hpp"

namespace bidgen {

/// Line-oriented `key = value` text with optional [section] headers and
/// '#' comments. Values may be scalars or comma-separated lists.
class ParsedConfig {
 public:
  static ParsedConfig parse_file(const std::string& path);
  static ParsedConfig parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& section, const std::string& key,
                            const std::vector<int>& fallback) const;

  /// Rejects keys outside the allowed set for a section (typo guard).
  void check_known_keys(const std::string& section,
                        const std::vector<std::string>& allowed) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct EvalConfig {
  std::vector<double> budgets = {1500.0, 2000.0, 2500.0, 3000.0};
  int n_runs = 50;
  int top_k = 5;
  int target_advertiser = 0;
  std::uint64_t seed_base = 1;
  int replan_every = 1;  // regenerate the plan every n periods
  int n_chunks = 8;      // deterministic parallel split over episodes

  void validate() const;
};

/// One structured file covering every stage of the pipeline.
struct ExperimentConfig {
  EnvConfig env;
  PacingAgentConfig agent;
  double explore_sigma = 0.3;
  int n_trajectories = 2000;

  int diffusion_steps = 20;
  double gamma = 0.008;
  bool cosine_squared = false;
  DenoiserConfig model;
  DenoiserTrainHyper train;

  InvDynConfig invdyn;
  InvDynTrainHyper invdyn_train;

  SamplerConfig sampler;
  std::string condition_layout = "return";
  EvalConfig eval;
};

/// Flat key-value environment config; accepts bare keys or an [env] section.
EnvConfig load_env_config(const std::string& path);

ExperimentConfig experiment_from_config(const ParsedConfig& cfg);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace bidgen

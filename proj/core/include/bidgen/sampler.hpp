#pragma once

#include <vector>

#include "bidgen/denoiser.hpp"
#include "bidgen/rng.hpp"
#include "bidgen/schedule.hpp"

namespace bidgen {

struct SamplerConfig {
  double omega = 0.2;        // guidance scale
  double temperature = 0.5;  // per-step variance multiplier, in [0,1]
  bool unit_prior = false;   // start from N(0,I) instead of N(0, beta_K I)
  bool noised_history = false;  // inpaint forward-noised history at each step

  // Clamp the implied clean signal to [-x0_max, x0_max] before each denoise
  // step, expressed as a correction to eps_hat (the posterior mean is linear
  // in eps_hat, so the reverse-step rule itself is untouched). Small-K
  // schedules clip the final beta near 1, which amplifies prediction error
  // by 1/sqrt(alpha_K) on the first reverse step; the clamp absorbs it.
  bool clip_x0 = true;
  double x0_max = 1.0;

  void validate() const;
};

/// eps_hat correction implementing the clean-signal clamp at step k.
void clamp_denoised(const double* x_k, double* eps_hat, std::size_t n, int k,
                    const NoiseSchedule& schedule, double x0_max);

/// Classifier-free mixture: eps_u + omega * (eps_c - eps_u). omega = 0 and
/// omega = 1 return the unconditional / conditional estimate bit-exactly.
void guided_epsilon(const DenoiserParams& params, const double* x_k, int k,
                    const double* y, double omega, double* out);
std::vector<double> guided_epsilon(const DenoiserParams& params,
                                   const std::vector<double>& x_k, int k,
                                   const double* y, double omega);

/// Posterior-mean step with low-temperature noise:
/// x_{k-1} = (x_k - beta_k / sqrt(1 - abar_k) * eps_hat) / sqrt(alpha_k)
///           + sqrt(temperature * beta_k) * z.
/// The noise term is suppressed at k = 1 and at temperature 0.
void reverse_step(const double* x_k, const double* eps_hat, std::size_t n, int k,
                  const NoiseSchedule& schedule, double temperature, const double* z,
                  double* out);
std::vector<double> reverse_step(const std::vector<double>& x_k,
                                 const std::vector<double>& eps_hat, int k,
                                 const NoiseSchedule& schedule, double temperature,
                                 const std::vector<double>& z);

/// Full reverse-process generation with history inpainting: the first
/// `history_len` rows are re-imposed before every denoise step and once more
/// on the final output, so they match the observed history bit-exactly.
/// `history` holds history_len * D normalized features; y may be nullptr for
/// unconditional generation. Returns the full T x D state array.
std::vector<double> generate_trajectory(const DenoiserParams& params,
                                        const NoiseSchedule& schedule,
                                        const std::vector<double>& history,
                                        int history_len, const double* y,
                                        const SamplerConfig& config, Rng& rng);

}  // namespace bidgen

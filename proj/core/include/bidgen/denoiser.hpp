#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bidgen/nn.hpp"
#include "bidgen/rng.hpp"
#include "bidgen/schedule.hpp"
#include "bidgen/types.hpp"

namespace bidgen {

/// Noise-prediction network: residual blocks of temporal convolutions with
/// group normalization and Mish, conditioned through sinusoidal step features
/// and a condition vector, each passed through its own 2-layer embedding MLP
/// (256 hidden units). A learned null embedding stands in for dropped
/// conditions, so the unconditional branch shares all other weights.
struct DenoiserConfig {
  int T = 96;
  int D = 5;
  int n_blocks = 3;
  std::vector<int> channels = {32, 64};  // per-block widths; last repeats
  int embed_dim = 128;
  int embed_hidden = 256;
  int cond_dim = 1;
  double dropout_p = 0.2;  // condition dropout probability during training
  int kernel_size = 3;
  int gn_groups = 8;
  double gn_eps = 1e-5;

  void validate() const;
  int block_channels(int b) const;
  std::size_t param_count() const;
};

struct DenoiserParams {
  DenoiserConfig config;
  std::vector<double> w;  // flat, in documented declaration order
};

/// Fan-in-scaled uniform initialization; GroupNorm scales start at 1.
/// Identical seeds produce bit-identical parameters.
DenoiserParams init_denoiser(const DenoiserConfig& config, Rng& rng);

/// eps_theta(x_k, y, k). x_k is T x D row-major; y is either cond_dim values
/// or nullptr for the unconditional (null-token) branch. k >= 1.
void predict_noise(const DenoiserParams& params, const double* x_k, int k,
                   const double* y, double* out);
std::vector<double> predict_noise(const DenoiserParams& params,
                                  const std::vector<double>& x_k, int k,
                                  const double* y);

/// One training example with every random draw fixed; shared by the loss,
/// the gradient and the finite-difference check.
struct DenoiserSample {
  std::vector<double> x0;   // T*D normalized states
  std::vector<double> eps;  // T*D target noise
  int k = 1;
  std::vector<double> cond;  // empty => null token
};

/// Dim-normalized objective |eps - eps_theta(x_k, y, k)|^2 / (T*D) with
/// x_k built by the closed-form forward sample.
double denoiser_loss(const DenoiserParams& params, const NoiseSchedule& schedule,
                     const DenoiserSample& sample);

/// Loss plus accumulated parameter gradient (scaled by `weight`).
double denoiser_loss_grad(const DenoiserParams& params, const NoiseSchedule& schedule,
                          const DenoiserSample& sample, double weight,
                          std::vector<double>& grad_accum);

struct DenoiserTrainHyper {
  double lr = 1e-4;
  double batch_frac = 0.02;  // fraction of trajectories per step
  int epochs = 500;          // one sampled-batch update per epoch
  int ema_period = 4;
  double ema_decay = 0.9;
  std::uint64_t seed = 0;
  int grad_chunks = 8;  // fixed reduction order; independent of thread count
};

struct DenoiserTrainResult {
  DenoiserParams params;  // EMA weights
  DenoiserParams last;    // raw final iterate
  std::vector<double> loss_history;
};

/// Gradient-descent training of the noise objective: per step, sample a
/// batch, per trajectory draw k ~ U{1..K} and unit Gaussian noise, drop the
/// condition with probability dropout_p, and take one Adam step on the mean
/// loss. EMA shadow is refreshed every ema_period steps and returned.
/// Deterministic given the hyper seed. A non-finite loss aborts with step
/// diagnostics.
DenoiserTrainResult train_denoiser(const TrainSet& data, const NoiseSchedule& schedule,
                                   const DenoiserConfig& config,
                                   const DenoiserTrainHyper& hyper);

/// Central-difference verification of the full training loss at n_coords
/// random parameter coordinates; returns the max relative error.
double finite_diff_check_denoiser(const DenoiserParams& params,
                                  const NoiseSchedule& schedule,
                                  const DenoiserSample& sample, int n_coords,
                                  std::uint64_t coord_seed, double h = 1e-4);

}  // namespace bidgen

#pragma once

#include <cstdint>
#include <vector>

#include "bidgen/rng.hpp"
#include "bidgen/types.hpp"

namespace bidgen {

/// Action head: a 3-layer fully connected network (Mish hidden activations)
/// mapping a history window s_{t-L..t} plus the target next state to the
/// lambdas that should produce that transition.
struct InvDynConfig {
  int L = 2;  // history length; window holds L+1 observed states
  int D = 5;
  int hidden = 64;
  int action_dim = 1;  // J+1
  double lambda_max = 1000.0;

  void validate() const;
  int input_dim() const { return (L + 2) * D; }
  std::size_t param_count() const;
};

struct InvDynParams {
  InvDynConfig config;
  std::vector<double> w;
};

InvDynParams init_invdyn(const InvDynConfig& config, Rng& rng);

/// Raw network output for a full (L+2)*D window (history then next state),
/// normalized feature space in, lambdas out.
std::vector<double> invdyn_forward(const InvDynParams& params, const double* window);

/// Clipped to [0, lambda_max]; interpreted as the absolute lambda vector for
/// the next period. history holds L+1 normalized states (left-pad by
/// repeating the first observed state when fewer exist).
Action predict_action(const InvDynParams& params, const std::vector<double>& history,
                      const std::vector<double>& next_state);

struct InvDynSample {
  std::vector<double> window;  // (L+2)*D
  std::vector<double> target;  // action_dim
};

double invdyn_loss(const InvDynParams& params, const InvDynSample& sample);
double invdyn_loss_grad(const InvDynParams& params, const InvDynSample& sample,
                        double weight, std::vector<double>& grad_accum);

/// Builds every (s_{t-L:t}, a_t, s_{t+1}) window of the dataset; windows with
/// t < L are left-padded by repeating s_0.
std::vector<InvDynSample> build_invdyn_windows(const TrainSet& data, int L);

struct InvDynTrainHyper {
  double lr = 1e-3;
  int batch_size = 256;
  int epochs = 2000;  // gradient steps
  std::uint64_t seed = 0;
  int grad_chunks = 8;
};

struct InvDynTrainResult {
  InvDynParams params;
  std::vector<double> loss_history;
};

/// Mean-squared-error regression of logged lambdas on state windows, same
/// determinism contract as the denoiser trainer.
InvDynTrainResult train_invdyn(const TrainSet& data, int L, const InvDynTrainHyper& hyper,
                               InvDynConfig base = {});

double finite_diff_check_invdyn(const InvDynParams& params, const InvDynSample& sample,
                                int n_coords, std::uint64_t coord_seed, double h = 1e-4);

}  // namespace bidgen

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace bidgen::nn {

// ---- activations -----------------------------------------------------------

double mish(double x);
double mish_grad(double x);

void mish_forward(const double* x, std::size_t n, double* y);
/// dx[i] += dy[i] * mish'(x[i]), where x is the pre-activation input.
void mish_backward(const double* x, const double* dy, std::size_t n, double* dx);

// ---- dense layer ------------------------------------------------------------

/// y = W x + b with W stored row-major [n_out x n_in].
void linear_forward(const double* x, const double* W, const double* b,
                    std::size_t n_in, std::size_t n_out, double* y);

/// Accumulates dW, db and writes dx (pass dx = nullptr to skip input grads).
void linear_backward(const double* x, const double* W, const double* dy,
                     std::size_t n_in, std::size_t n_out, double* dW, double* db,
                     double* dx);

// ---- temporal (1-d) convolution ----------------------------------------------

/// 'same' zero-padded convolution over the time axis. Input [c_in x T] and
/// output [c_out x T] are channel-major; W is [c_out x c_in x ks], ks odd.
void conv1d_forward(const double* in, const double* W, const double* b, int c_in,
                    int c_out, int T, int ks, double* out);

void conv1d_backward(const double* in, const double* W, const double* d_out, int c_in,
                     int c_out, int T, int ks, double* dW, double* db, double* d_in);

// ---- group normalization ------------------------------------------------------

/// Normalizes [C x T] over each group of C/groups channels; per-channel
/// affine. Caches mean/invstd per group and the normalized activations.
struct GroupNormCache {
  std::vector<double> mean, invstd;  // per group
  std::vector<double> xhat;          // C x T
};

void groupnorm_forward(const double* x, const double* gamma, const double* beta, int C,
                       int T, int groups, double eps, double* y, GroupNormCache& cache);

void groupnorm_backward(const double* dy, const double* gamma, int C, int T, int groups,
                        const GroupNormCache& cache, double* dgamma, double* dbeta,
                        double* dx);

// ---- sinusoidal features -------------------------------------------------------

/// Standard interleaved sin/cos positional features of a scalar step index.
void sinusoidal_features(double k, int dim, double* out);

// ---- optimizer -----------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;

  void init(std::size_t n);
};

void adam_step(std::vector<double>& params, const std::vector<double>& grad,
               AdamState& state, const AdamConfig& config);

// ---- exponential moving average -------------------------------------------------

/// Bias-corrected EMA of parameter iterates, updated every `period`
/// optimizer steps. snapshot() divides out the zero-init bias, so short desk
/// runs still return a proper average of recent iterates.
struct Ema {
  double decay = 0.9;
  int period = 4;

  void init(std::size_t n);
  void observe(const std::vector<double>& params);  // call once per optimizer step
  std::vector<double> snapshot() const;
  bool started() const { return n_updates_ > 0; }

 private:
  std::vector<double> shadow_;
  std::int64_t step_ = 0;
  std::int64_t n_updates_ = 0;
};

// ---- gradient verification -------------------------------------------------------

/// Central-difference check of an analytic gradient at `n_coords` randomly
/// chosen coordinates. Relative error per coordinate is
/// |a - n| / max(|a|, |n|); coordinates where both magnitudes are below 1e-7
/// count as exact. Returns the maximum over checked coordinates.
double finite_diff_check(
    const std::function<double(const std::vector<double>&)>& loss,
    const std::function<std::vector<double>(const std::vector<double>&)>& analytic_grad,
    const std::vector<double>& params, int n_coords, std::uint64_t coord_seed,
    double h = 1e-4);

}  // namespace bidgen::nn

#include "bidgen/nn.hpp"

#include <algorithm>
#include <cmath>

#include "bidgen/errors.hpp"
#include "bidgen/rng.hpp"

namespace bidgen::nn {

namespace {
double softplus(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

double mish(double x) { return x * std::tanh(softplus(x)); }

double mish_grad(double x) {
  const double t = std::tanh(softplus(x));
  return t + x * (1.0 - t * t) * sigmoid(x);
}

void mish_forward(const double* x, std::size_t n, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = mish(x[i]);
}

void mish_backward(const double* x, const double* dy, std::size_t n, double* dx) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * mish_grad(x[i]);
}

void linear_forward(const double* x, const double* W, const double* b, std::size_t n_in,
                    std::size_t n_out, double* y) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = W + o * n_in;
    double acc = b[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void linear_backward(const double* x, const double* W, const double* dy, std::size_t n_in,
                     std::size_t n_out, double* dW, double* db, double* dx) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const double g = dy[o];
    db[o] += g;
    double* dWrow = dW + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) dWrow[i] += g * x[i];
  }
  if (dx) {
    for (std::size_t o = 0; o < n_out; ++o) {
      const double g = dy[o];
      const double* row = W + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) dx[i] += g * row[i];
    }
  }
}

void conv1d_forward(const double* in, const double* W, const double* b, int c_in,
                    int c_out, int T, int ks, double* out) {
  const int pad = ks / 2;
  for (int co = 0; co < c_out; ++co) {
    double* orow = out + static_cast<std::size_t>(co) * T;
    std::fill(orow, orow + T, b[co]);
    for (int ci = 0; ci < c_in; ++ci) {
      const double* irow = in + static_cast<std::size_t>(ci) * T;
      const double* wrow = W + (static_cast<std::size_t>(co) * c_in + ci) * ks;
      for (int d = 0; d < ks; ++d) {
        const double w = wrow[d];
        const int off = d - pad;
        const int t0 = std::max(0, -off);
        const int t1 = std::min(T, T - off);
        for (int t = t0; t < t1; ++t) orow[t] += w * irow[t + off];
      }
    }
  }
}

void conv1d_backward(const double* in, const double* W, const double* d_out, int c_in,
                     int c_out, int T, int ks, double* dW, double* db, double* d_in) {
  const int pad = ks / 2;
  for (int co = 0; co < c_out; ++co) {
    const double* grow = d_out + static_cast<std::size_t>(co) * T;
    double acc = 0.0;
    for (int t = 0; t < T; ++t) acc += grow[t];
    db[co] += acc;
    for (int ci = 0; ci < c_in; ++ci) {
      const double* irow = in + static_cast<std::size_t>(ci) * T;
      double* dWrow = dW + (static_cast<std::size_t>(co) * c_in + ci) * ks;
      for (int d = 0; d < ks; ++d) {
        const int off = d - pad;
        const int t0 = std::max(0, -off);
        const int t1 = std::min(T, T - off);
        double s = 0.0;
        for (int t = t0; t < t1; ++t) s += grow[t] * irow[t + off];
        dWrow[d] += s;
      }
    }
  }
  if (d_in) {
    for (int ci = 0; ci < c_in; ++ci) {
      double* drow = d_in + static_cast<std::size_t>(ci) * T;
      for (int co = 0; co < c_out; ++co) {
        const double* grow = d_out + static_cast<std::size_t>(co) * T;
        const double* wrow = W + (static_cast<std::size_t>(co) * c_in + ci) * ks;
        for (int d = 0; d < ks; ++d) {
          const double w = wrow[d];
          const int off = d - pad;
          const int t0 = std::max(0, -off);
          const int t1 = std::min(T, T - off);
          for (int t = t0; t < t1; ++t) drow[t + off] += w * grow[t];
        }
      }
    }
  }
}

void groupnorm_forward(const double* x, const double* gamma, const double* beta, int C,
                       int T, int groups, double eps, double* y, GroupNormCache& cache) {
  if (groups < 1 || C % groups != 0)
    fail(Errc::invalid_config, "groupnorm: channels must divide evenly into groups");
  const int S = C / groups;
  const std::size_t n = static_cast<std::size_t>(C) * T;
  cache.mean.resize(groups);
  cache.invstd.resize(groups);
  cache.xhat.resize(n);  // fully overwritten below

  for (int g = 0; g < groups; ++g) {
    const double* gx = x + static_cast<std::size_t>(g) * S * T;
    const std::size_t gn = static_cast<std::size_t>(S) * T;
    double mean = 0.0;
    for (std::size_t i = 0; i < gn; ++i) mean += gx[i];
    mean /= static_cast<double>(gn);
    double var = 0.0;
    for (std::size_t i = 0; i < gn; ++i) {
      const double d = gx[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(gn);
    const double invstd = 1.0 / std::sqrt(var + eps);
    cache.mean[g] = mean;
    cache.invstd[g] = invstd;

    double* gxh = cache.xhat.data() + static_cast<std::size_t>(g) * S * T;
    for (std::size_t i = 0; i < gn; ++i) gxh[i] = (gx[i] - mean) * invstd;
  }
  for (int c = 0; c < C; ++c) {
    const double* xh = cache.xhat.data() + static_cast<std::size_t>(c) * T;
    double* yr = y + static_cast<std::size_t>(c) * T;
    for (int t = 0; t < T; ++t) yr[t] = gamma[c] * xh[t] + beta[c];
  }
}

void groupnorm_backward(const double* dy, const double* gamma, int C, int T, int groups,
                        const GroupNormCache& cache, double* dgamma, double* dbeta,
                        double* dx) {
  const int S = C / groups;
  for (int c = 0; c < C; ++c) {
    const double* dyr = dy + static_cast<std::size_t>(c) * T;
    const double* xh = cache.xhat.data() + static_cast<std::size_t>(c) * T;
    double sg = 0.0, sb = 0.0;
    for (int t = 0; t < T; ++t) {
      sg += dyr[t] * xh[t];
      sb += dyr[t];
    }
    dgamma[c] += sg;
    dbeta[c] += sb;
  }
  for (int g = 0; g < groups; ++g) {
    const std::size_t gn = static_cast<std::size_t>(S) * T;
    const double invstd = cache.invstd[g];
    // dxhat = dy * gamma (per channel); reduce within the group.
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (int s = 0; s < S; ++s) {
      const int c = g * S + s;
      const double* dyr = dy + static_cast<std::size_t>(c) * T;
      const double* xh = cache.xhat.data() + static_cast<std::size_t>(c) * T;
      for (int t = 0; t < T; ++t) {
        const double dxh = dyr[t] * gamma[c];
        sum_dxhat += dxh;
        sum_dxhat_xhat += dxh * xh[t];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(gn);
    for (int s = 0; s < S; ++s) {
      const int c = g * S + s;
      const double* dyr = dy + static_cast<std::size_t>(c) * T;
      const double* xh = cache.xhat.data() + static_cast<std::size_t>(c) * T;
      double* dxr = dx + static_cast<std::size_t>(c) * T;
      for (int t = 0; t < T; ++t) {
        const double dxh = dyr[t] * gamma[c];
        dxr[t] += invstd * (dxh - inv_n * (sum_dxhat + xh[t] * sum_dxhat_xhat));
      }
    }
  }
}

void sinusoidal_features(double k, int dim, double* out) {
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    out[2 * i] = std::sin(k * freq);
    out[2 * i + 1] = std::cos(k * freq);
  }
  if (dim % 2 == 1) out[dim - 1] = 0.0;
}

void AdamState::init(std::size_t n) {
  m.assign(n, 0.0);
  v.assign(n, 0.0);
  t = 0;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grad,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    fail(Errc::shape_mismatch, "adam_step: size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

void Ema::init(std::size_t n) {
  shadow_.assign(n, 0.0);
  step_ = 0;
  n_updates_ = 0;
}

void Ema::observe(const std::vector<double>& params) {
  step_ += 1;
  if (period > 1 && step_ % period != 0) return;
  n_updates_ += 1;
  for (std::size_t i = 0; i < shadow_.size(); ++i)
    shadow_[i] = decay * shadow_[i] + (1.0 - decay) * params[i];
}

std::vector<double> Ema::snapshot() const {
  std::vector<double> out = shadow_;
  if (n_updates_ == 0) return out;
  const double correction = 1.0 - std::pow(decay, static_cast<double>(n_updates_));
  if (correction > 0.0)
    for (auto& v : out) v /= correction;
  return out;
}

double finite_diff_check(
    const std::function<double(const std::vector<double>&)>& loss,
    const std::function<std::vector<double>(const std::vector<double>&)>& analytic_grad,
    const std::vector<double>& params, int n_coords, std::uint64_t coord_seed, double h) {
  if (n_coords < 1) fail(Errc::invalid_argument, "finite_diff_check: n_coords must be >= 1");
  const std::vector<double> grad = analytic_grad(params);
  if (grad.size() != params.size())
    fail(Errc::shape_mismatch, "finite_diff_check: grad size != param size");

  Rng rng(coord_seed);
  std::vector<double> work = params;
  double max_rel = 0.0;
  for (int c = 0; c < n_coords; ++c) {
    const std::size_t i =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(params.size()) - 1));
    const double orig = work[i];
    work[i] = orig + h;
    const double lp = loss(work);
    work[i] = orig - h;
    const double lm = loss(work);
    work[i] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double analytic = grad[i];
    const double scale = std::max(std::abs(numeric), std::abs(analytic));
    if (scale < 1e-7) continue;  // both effectively zero
    max_rel = std::max(max_rel, std::abs(numeric - analytic) / scale);
  }
  return max_rel;
}

}  // namespace bidgen::nn

#include "bidgen/sampler.hpp"

#include <cmath>
#include <string>

#include "bidgen/errors.hpp"

namespace bidgen {

void SamplerConfig::validate() const {
  if (!std::isfinite(omega)) fail(Errc::invalid_config, "sampler: omega must be finite");
  if (!(temperature >= 0.0 && temperature <= 1.0))
    fail(Errc::invalid_config, "sampler: temperature must be in [0,1]");
  if (!(x0_max > 0.0)) fail(Errc::invalid_config, "sampler: x0_max must be > 0");
}

void clamp_denoised(const double* x_k, double* eps_hat, std::size_t n, int k,
                    const NoiseSchedule& schedule, double x0_max) {
  if (k < 1 || k > schedule.K)
    fail(Errc::invalid_argument, "clamp_denoised: k out of [1, K]");
  const double sqrt_ab = std::sqrt(schedule.alpha_bar[k]);
  const double sqrt_1mab = std::sqrt(1.0 - schedule.alpha_bar[k]);
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = (x_k[i] - sqrt_1mab * eps_hat[i]) / sqrt_ab;
    if (x0 > x0_max) {
      eps_hat[i] = (x_k[i] - sqrt_ab * x0_max) / sqrt_1mab;
    } else if (x0 < -x0_max) {
      eps_hat[i] = (x_k[i] + sqrt_ab * x0_max) / sqrt_1mab;
    }
  }
}

void guided_epsilon(const DenoiserParams& params, const double* x_k, int k, const double* y,
                    double omega, double* out) {
  const auto& cfg = params.config;
  const std::size_t n = static_cast<std::size_t>(cfg.T) * cfg.D;
  if (omega == 0.0) {
    predict_noise(params, x_k, k, nullptr, out);
    return;
  }
  if (omega == 1.0) {
    predict_noise(params, x_k, k, y, out);
    return;
  }
  thread_local std::vector<double> uncond, cond;
  uncond.resize(n);
  cond.resize(n);
  predict_noise(params, x_k, k, nullptr, uncond.data());
  predict_noise(params, x_k, k, y, cond.data());
  for (std::size_t i = 0; i < n; ++i) out[i] = uncond[i] + omega * (cond[i] - uncond[i]);
}

std::vector<double> guided_epsilon(const DenoiserParams& params,
                                   const std::vector<double>& x_k, int k, const double* y,
                                   double omega) {
  std::vector<double> out(x_k.size());
  guided_epsilon(params, x_k.data(), k, y, omega, out.data());
  return out;
}

void reverse_step(const double* x_k, const double* eps_hat, std::size_t n, int k,
                  const NoiseSchedule& schedule, double temperature, const double* z,
                  double* out) {
  if (k < 1 || k > schedule.K)
    fail(Errc::invalid_argument, "reverse_step: k out of [1, K]");
  const double beta = schedule.beta[k];
  const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha[k]);
  const double eps_coef = beta / std::sqrt(1.0 - schedule.alpha_bar[k]);
  const bool add_noise = k > 1 && temperature > 0.0;
  const double noise_scale = add_noise ? std::sqrt(temperature * beta) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = inv_sqrt_alpha * (x_k[i] - eps_coef * eps_hat[i]);
    out[i] = add_noise ? mu + noise_scale * z[i] : mu;
  }
}

std::vector<double> reverse_step(const std::vector<double>& x_k,
                                 const std::vector<double>& eps_hat, int k,
                                 const NoiseSchedule& schedule, double temperature,
                                 const std::vector<double>& z) {
  if (x_k.size() != eps_hat.size() || (!z.empty() && z.size() != x_k.size()))
    fail(Errc::shape_mismatch, "reverse_step: shape mismatch");
  std::vector<double> out(x_k.size());
  reverse_step(x_k.data(), eps_hat.data(), x_k.size(), k, schedule, temperature,
               z.empty() ? nullptr : z.data(), out.data());
  return out;
}

std::vector<double> generate_trajectory(const DenoiserParams& params,
                                        const NoiseSchedule& schedule,
                                        const std::vector<double>& history,
                                        int history_len, const double* y,
                                        const SamplerConfig& config, Rng& rng) {
  config.validate();
  const auto& cfg = params.config;
  const int T = cfg.T;
  const int D = cfg.D;
  if (history_len < 0 || history_len >= T)
    fail(Errc::invalid_argument, "generate_trajectory: history length must be in [0, T)");
  if (history.size() != static_cast<std::size_t>(history_len) * D)
    fail(Errc::shape_mismatch, "generate_trajectory: history size != history_len * D");
  for (double v : history)
    if (!std::isfinite(v))
      fail(Errc::non_finite, "generate_trajectory: non-finite history state");

  const std::size_t n = static_cast<std::size_t>(T) * D;
  const std::size_t n_hist = history.size();

  std::vector<double> x(n);
  const double prior_std = config.unit_prior ? 1.0 : std::sqrt(schedule.beta[schedule.K]);
  for (auto& v : x) v = prior_std * rng.normal();

  std::vector<double> eps_hat(n), z(n), next(n);

  for (int k = schedule.K; k >= 1; --k) {
    if (config.noised_history && k > 1) {
      // Match the history rows to the current noise level.
      const double a = std::sqrt(schedule.alpha_bar[k]);
      const double b = std::sqrt(1.0 - schedule.alpha_bar[k]);
      for (std::size_t i = 0; i < n_hist; ++i) x[i] = a * history[i] + b * rng.normal();
    } else {
      for (std::size_t i = 0; i < n_hist; ++i) x[i] = history[i];
    }

    guided_epsilon(params, x.data(), k, y, config.omega, eps_hat.data());
    if (config.clip_x0) clamp_denoised(x.data(), eps_hat.data(), n, k, schedule, config.x0_max);

    const bool add_noise = k > 1 && config.temperature > 0.0;
    if (add_noise)
      for (auto& v : z) v = rng.normal();
    reverse_step(x.data(), eps_hat.data(), n, k, schedule, config.temperature,
                 add_noise ? z.data() : nullptr, next.data());
    x.swap(next);

    for (double v : x)
      if (!std::isfinite(v))
        fail(Errc::non_finite,
             "generate_trajectory: non-finite value after step k=" + std::to_string(k));
  }

  for (std::size_t i = 0; i < n_hist; ++i) x[i] = history[i];
  return x;
}

}  // namespace bidgen

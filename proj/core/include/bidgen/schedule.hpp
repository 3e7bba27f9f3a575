#pragma once

#include <cstddef>
#include <vector>

namespace bidgen {

/// Precomputed noise schedule for K diffusion steps. Arrays are indexed
/// 0..K with alpha_bar[0] = 1; beta[0] and alpha[0] are unused padding
/// (0 and 1 respectively).
struct NoiseSchedule {
  int K = 0;
  double gamma = 0.008;
  bool cosine_squared = false;
  std::vector<double> alpha_bar;  // strictly decreasing, alpha_bar[K] < 1e-3
  std::vector<double> beta;       // in (0, 0.999]
  std::vector<double> alpha;      // 1 - beta

  void validate() const;  // throws on any broken invariant
};

/// Raw cosine decay ratio g(k)/g(0) with offset gamma; the squared variant
/// squares the cosine before taking the ratio.
double cosine_alpha_bar(int k, int K, double gamma, bool squared = false);

/// Builds the schedule from the cosine curve. Per-step betas come from
/// consecutive alpha_bar ratios and are clipped to 0.999; alpha_bar is then
/// rebuilt from the clipped betas so that alpha[k] * alpha_bar[k-1] ==
/// alpha_bar[k] holds exactly.
NoiseSchedule cosine_schedule(int K, double gamma, bool squared = false);

/// Closed-form forward noising: out = sqrt(alpha_bar_k) * x0 +
/// sqrt(1 - alpha_bar_k) * eps, elementwise. k = 0 returns x0 unchanged.
void forward_sample(const double* x0, const double* eps, std::size_t n, int k,
                    const NoiseSchedule& schedule, double* out);
std::vector<double> forward_sample(const std::vector<double>& x0,
                                   const std::vector<double>& eps, int k,
                                   const NoiseSchedule& schedule);

}  // namespace bidgen

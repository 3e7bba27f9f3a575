#include "bidgen/schedule.hpp"

#include <cmath>
#include <string>

#include "bidgen/errors.hpp"

namespace bidgen {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kBetaClip = 0.999;
}  // namespace

double cosine_alpha_bar(int k, int K, double gamma, bool squared) {
  if (K < 1) fail(Errc::invalid_argument, "cosine_alpha_bar: K must be >= 1");
  if (!(gamma > 0.0)) fail(Errc::invalid_argument, "cosine_alpha_bar: gamma must be > 0");
  if (k < 0 || k > K) fail(Errc::invalid_argument, "cosine_alpha_bar: k out of [0, K]");
  const double num = std::cos(((static_cast<double>(k) / K + gamma) / (1.0 + gamma)) * kPi / 2.0);
  const double den = std::cos((gamma / (1.0 + gamma)) * kPi / 2.0);
  if (squared) return (num * num) / (den * den);
  return num / den;
}

NoiseSchedule cosine_schedule(int K, double gamma, bool squared) {
  if (K < 1) fail(Errc::invalid_argument, "cosine_schedule: K must be >= 1");
  if (!(gamma > 0.0)) fail(Errc::invalid_argument, "cosine_schedule: gamma must be > 0");

  NoiseSchedule s;
  s.K = K;
  s.gamma = gamma;
  s.cosine_squared = squared;
  s.alpha_bar.assign(K + 1, 0.0);
  s.beta.assign(K + 1, 0.0);
  s.alpha.assign(K + 1, 1.0);

  s.alpha_bar[0] = 1.0;
  double prev = 1.0;
  for (int k = 1; k <= K; ++k) {
    const double raw = cosine_alpha_bar(k, K, gamma, squared);
    double beta = 1.0 - raw / prev;
    if (beta > kBetaClip) beta = kBetaClip;
    s.beta[k] = beta;
    s.alpha[k] = 1.0 - beta;
    // Rebuild alpha_bar from the (possibly clipped) beta so the product
    // identity alpha[k] * alpha_bar[k-1] == alpha_bar[k] is exact.
    s.alpha_bar[k] = s.alpha[k] * prev;
    prev = s.alpha_bar[k];
  }
  s.validate();
  return s;
}

void NoiseSchedule::validate() const {
  if (K < 1) fail(Errc::invalid_config, "schedule: K < 1");
  if (alpha_bar.size() != static_cast<std::size_t>(K + 1) ||
      beta.size() != static_cast<std::size_t>(K + 1) ||
      alpha.size() != static_cast<std::size_t>(K + 1))
    fail(Errc::invalid_config, "schedule: array length != K+1");
  if (alpha_bar[0] != 1.0) fail(Errc::invalid_config, "schedule: alpha_bar[0] != 1");
  for (int k = 1; k <= K; ++k) {
    if (!(alpha_bar[k] < alpha_bar[k - 1]))
      fail(Errc::invalid_config, "schedule: alpha_bar not strictly decreasing at k=" +
                                     std::to_string(k));
    if (!(beta[k] > 0.0 && beta[k] < 1.0))
      fail(Errc::invalid_config, "schedule: beta out of (0,1) at k=" + std::to_string(k));
    if (std::abs(alpha[k] * alpha_bar[k - 1] - alpha_bar[k]) > 1e-12)
      fail(Errc::invalid_config, "schedule: product identity broken at k=" + std::to_string(k));
  }
}

void forward_sample(const double* x0, const double* eps, std::size_t n, int k,
                    const NoiseSchedule& schedule, double* out) {
  if (k < 0 || k > schedule.K)
    fail(Errc::invalid_argument, "forward_sample: k out of [0, K]");
  if (k == 0) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x0[i];
    return;
  }
  const double a = std::sqrt(schedule.alpha_bar[k]);
  const double b = std::sqrt(1.0 - schedule.alpha_bar[k]);
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x0[i] + b * eps[i];
}

std::vector<double> forward_sample(const std::vector<double>& x0,
                                   const std::vector<double>& eps, int k,
                                   const NoiseSchedule& schedule) {
  if (x0.size() != eps.size())
    fail(Errc::shape_mismatch, "forward_sample: x0 and eps shapes differ");
  std::vector<double> out(x0.size());
  forward_sample(x0.data(), eps.data(), x0.size(), k, schedule, out.data());
  return out;
}

}  // namespace bidgen

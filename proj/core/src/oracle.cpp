#include "bidgen/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bidgen/errors.hpp"

namespace bidgen {

OracleResult hindsight_oracle(const std::vector<OracleItem>& impressions, double budget) {
  if (budget <= 0.0) fail(Errc::invalid_argument, "hindsight_oracle: budget must be > 0");
  for (const auto& it : impressions)
    if (it.value < 0.0 || it.cost < 0.0 || !std::isfinite(it.value) || !std::isfinite(it.cost))
      fail(Errc::invalid_argument, "hindsight_oracle: values and costs must be finite, >= 0");

  OracleResult result;
  if (impressions.empty()) return result;

  std::vector<int> order;
  order.reserve(impressions.size());
  for (int i = 0; i < static_cast<int>(impressions.size()); ++i)
    if (impressions[i].value > 0.0) order.push_back(i);

  // Descending cost-effectiveness; zero-cost items sort first. Cross-multiplied
  // comparison avoids dividing by zero costs. Index breaks exact ties.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double lhs = impressions[a].value * impressions[b].cost;
    const double rhs = impressions[b].value * impressions[a].cost;
    if (lhs != rhs) return lhs > rhs;
    return a < b;
  });

  // Selected items form a prefix of the CE ranking: stop at the first item
  // the remaining budget cannot cover.
  double spent = 0.0;
  int boundary = -1;
  for (int idx : order) {
    const auto& it = impressions[idx];
    if (spent + it.cost > budget) break;
    result.selected.push_back(idx);
    spent += it.cost;
    result.total_value += it.value;
    if (it.cost > 0.0) boundary = idx;
  }
  result.total_cost = spent;
  if (boundary >= 0)
    result.lambda_star = impressions[boundary].cost / impressions[boundary].value;
  return result;
}

double brute_force_oracle(const std::vector<OracleItem>& impressions, double budget) {
  const int n = static_cast<int>(impressions.size());
  if (n > 20) fail(Errc::invalid_argument, "brute_force_oracle: more than 20 items");
  if (budget <= 0.0) fail(Errc::invalid_argument, "brute_force_oracle: budget must be > 0");
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    double value = 0.0, cost = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1ULL << i)) {
        value += impressions[i].value;
        cost += impressions[i].cost;
      }
    }
    if (cost <= budget && value > best) best = value;
  }
  return best;
}

std::vector<OracleItem> to_oracle_items(
    const std::vector<std::pair<double, double>>& impression_log) {
  std::vector<OracleItem> items;
  items.reserve(impression_log.size());
  for (const auto& [value, cost] : impression_log) items.push_back({value, cost});
  return items;
}

}  // namespace bidgen

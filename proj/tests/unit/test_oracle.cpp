#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bidgen/errors.hpp"
#include "bidgen/oracle.hpp"
#include "bidgen/rng.hpp"

using namespace bidgen;

TEST_CASE("unit costs make greedy exact") {
  const std::vector<OracleItem> items = {{2.0, 1.0}, {1.0, 1.0}, {0.5, 1.0}};
  const auto res = hindsight_oracle(items, 2.0);
  REQUIRE(res.selected.size() == 2);
  CHECK(res.selected[0] == 0);
  CHECK(res.selected[1] == 1);
  CHECK(res.total_value == doctest::Approx(3.0));
  CHECK(res.total_cost == doctest::Approx(2.0));
  // Boundary item is (1, 1): lambda* = cost/value = 1.
  CHECK(res.lambda_star == doctest::Approx(1.0));
}

TEST_CASE("budget covering everything selects all positive-value items") {
  const std::vector<OracleItem> items = {{1.0, 2.0}, {3.0, 1.0}, {0.5, 0.5}};
  const auto res = hindsight_oracle(items, 100.0);
  CHECK(res.selected.size() == 3);
  CHECK(res.total_value == doctest::Approx(4.5));
}

TEST_CASE("zero-cost positive-value items always come first") {
  const std::vector<OracleItem> items = {{0.3, 2.0}, {0.1, 0.0}, {5.0, 1.0}};
  const auto res = hindsight_oracle(items, 1.0);
  // Free item then the best paid one; the budget excludes the third.
  CHECK(std::find(res.selected.begin(), res.selected.end(), 1) != res.selected.end());
  CHECK(std::find(res.selected.begin(), res.selected.end(), 2) != res.selected.end());
  CHECK(res.total_cost <= 1.0);
}

TEST_CASE("empty input and error contracts") {
  CHECK(hindsight_oracle({}, 5.0).total_value == 0.0);
  CHECK_THROWS_AS(hindsight_oracle({{1.0, 1.0}}, 0.0), Error);
  CHECK_THROWS_AS(hindsight_oracle({{-1.0, 1.0}}, 1.0), Error);
  CHECK_THROWS_AS(brute_force_oracle(std::vector<OracleItem>(21, {1.0, 1.0}), 5.0), Error);
}

TEST_CASE("oracle determinism") {
  Rng rng(5);
  std::vector<OracleItem> items;
  for (int i = 0; i < 50; ++i) items.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.0, 2.0)});
  const auto a = hindsight_oracle(items, 10.0);
  const auto b = hindsight_oracle(items, 10.0);
  CHECK(a.selected == b.selected);
  CHECK(a.total_value == b.total_value);
}

TEST_CASE("knapsack fixture: optimum 9 from items 2+3") {
  const std::vector<OracleItem> items = {{6.0, 5.0}, {5.0, 4.0}, {4.0, 3.0}};
  CHECK(brute_force_oracle(items, 7.0) == doctest::Approx(9.0));
  CHECK(brute_force_oracle({{3.0, 2.0}}, 5.0) == doctest::Approx(3.0));  // single item fits
  CHECK(brute_force_oracle({{3.0, 6.0}}, 5.0) == doctest::Approx(0.0));  // single item too big
}

TEST_CASE("greedy equals brute force on equal-cost instances") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 12));
    const double cost = rng.uniform(0.2, 2.0);
    std::vector<OracleItem> items;
    for (int i = 0; i < n; ++i) items.push_back({rng.uniform(0.0, 1.0), cost});
    const double budget = rng.uniform(0.5, n * cost + 1.0);
    const auto greedy = hindsight_oracle(items, budget);
    const double exact = brute_force_oracle(items, budget);
    CHECK(greedy.total_value == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("greedy within one max item value of optimum on heterogeneous costs") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 12;
    std::vector<OracleItem> items;
    double max_value = 0.0;
    for (int i = 0; i < n; ++i) {
      items.push_back({rng.uniform(0.0, 1.0), rng.uniform(0.01, 1.5)});
      max_value = std::max(max_value, items.back().value);
    }
    const double budget = rng.uniform(0.5, 6.0);
    const auto greedy = hindsight_oracle(items, budget);
    const double exact = brute_force_oracle(items, budget);
    CHECK(greedy.total_value >= exact - max_value - 1e-12);
    CHECK(greedy.total_value <= exact + 1e-12);  // oracle upper-bounds greedy
  }
}

TEST_CASE("selection is a prefix of the CE ranking") {
  Rng rng(29);
  std::vector<OracleItem> items;
  for (int i = 0; i < 40; ++i) items.push_back({rng.uniform(0.01, 1.0), rng.uniform(0.05, 1.0)});
  const auto res = hindsight_oracle(items, 4.0);
  REQUIRE(!res.selected.empty());
  // Every unselected item has CE <= the worst selected CE, or would not fit.
  double worst_ce = 1e300;
  double spent = res.total_cost;
  for (int idx : res.selected)
    worst_ce = std::min(worst_ce, items[idx].value / items[idx].cost);
  for (int i = 0; i < static_cast<int>(items.size()); ++i) {
    if (std::find(res.selected.begin(), res.selected.end(), i) != res.selected.end()) continue;
    const double ce = items[i].value / items[i].cost;
    const bool lower_rank = ce <= worst_ce + 1e-12;
    const bool would_not_fit = spent + items[i].cost > 4.0;
    CHECK((lower_rank || would_not_fit));
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "avsec/assignment.hpp"
#include "avsec/rng.hpp"

using namespace avsec;

namespace {

struct BruteResult {
  int cardinality = 0;
  double cost = 0.0;
};

void brute_recurse(const std::vector<std::vector<double>>& c, double gate, size_t row,
                   std::vector<bool>& used, int matched, double cost, BruteResult& best) {
  if (row == c.size()) {
    if (matched > best.cardinality ||
        (matched == best.cardinality && cost < best.cost - 1e-12)) {
      best = {matched, cost};
    }
    return;
  }
  brute_recurse(c, gate, row + 1, used, matched, cost, best);  // row unmatched
  for (size_t j = 0; j < c[row].size(); ++j) {
    if (used[j]) continue;
    if (!std::isfinite(c[row][j]) || c[row][j] > gate) continue;
    used[j] = true;
    brute_recurse(c, gate, row + 1, used, matched + 1, cost + c[row][j], best);
    used[j] = false;
  }
}

BruteResult brute_force(const std::vector<std::vector<double>>& c, double gate) {
  BruteResult best{-1, 0.0};
  std::vector<bool> used(c.empty() ? 0 : c[0].size(), false);
  brute_recurse(c, gate, 0, used, 0, 0.0, best);
  return best;
}

}  // namespace

TEST_CASE("diagonal preference") {
  const Assignment a = solve_assignment({{1, 10}, {10, 1}}, 20.0);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == std::pair<int, int>(0, 0));
  CHECK(a.pairs[1] == std::pair<int, int>(1, 1));
  CHECK(a.total_cost == doctest::Approx(2.0));
  CHECK(a.unmatched_rows.empty());
  CHECK(a.unmatched_cols.empty());
}

TEST_CASE("total cost beats greedy row minima") {
  const Assignment a = solve_assignment({{1, 2}, {2, 100}}, 200.0);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == std::pair<int, int>(0, 1));
  CHECK(a.pairs[1] == std::pair<int, int>(1, 0));
  CHECK(a.total_cost == doctest::Approx(4.0));
}

TEST_CASE("gate forbids matches") {
  const Assignment a = solve_assignment({{5.0, 6.0}, {7.0, 8.0}}, 2.0);
  CHECK(a.pairs.empty());
  CHECK(a.unmatched_rows.size() == 2);
  CHECK(a.unmatched_cols.size() == 2);

  const Assignment b = solve_assignment({{5.0, 1.0}, {7.0, 8.0}}, 2.0);
  REQUIRE(b.pairs.size() == 1);
  CHECK(b.pairs[0] == std::pair<int, int>(0, 1));
  CHECK(b.unmatched_rows == std::vector<int>{1});
  CHECK(b.unmatched_cols == std::vector<int>{0});
}

TEST_CASE("cardinality outranks cost") {
  // row 1 can only take col 1, so a full matching costs 21 vs 1 for a lazy partial
  const Assignment a = solve_assignment({{1, 10}, {1e9, 20}}, 25.0);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == std::pair<int, int>(0, 0));
  CHECK(a.pairs[1] == std::pair<int, int>(1, 1));
  CHECK(a.total_cost == doctest::Approx(21.0));
}

TEST_CASE("empty and degenerate shapes") {
  const Assignment a = solve_assignment({}, 1.0);
  CHECK(a.pairs.empty());

  const Assignment b = solve_assignment({{0.5}}, 1.0);
  REQUIRE(b.pairs.size() == 1);
  CHECK(b.total_cost == doctest::Approx(0.5));

  const Assignment c = solve_assignment({{0.5, 0.2, 0.9}}, 1.0);
  REQUIRE(c.pairs.size() == 1);
  CHECK(c.pairs[0] == std::pair<int, int>(0, 1));
  CHECK(c.unmatched_cols.size() == 2);

  const Assignment d = solve_assignment({{0.5}, {0.2}, {0.9}}, 1.0);
  REQUIRE(d.pairs.size() == 1);
  CHECK(d.pairs[0] == std::pair<int, int>(1, 0));
  CHECK(d.unmatched_rows.size() == 2);
}

TEST_CASE("matches brute force on 1000 random instances up to 6x6") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t rows = 1 + rng.next_u64() % 6;
    const size_t cols = 1 + rng.next_u64() % 6;
    const double gate = rng.uniform(0.5, 9.0);
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
    for (auto& r : cost)
      for (double& v : r) v = rng.uniform(0.0, 10.0);

    const Assignment got = solve_assignment(cost, gate);
    const BruteResult want = brute_force(cost, gate);

    CHECK(static_cast<int>(got.pairs.size()) == want.cardinality);
    CHECK(got.total_cost == doctest::Approx(want.cost).epsilon(1e-9));
    CHECK(got.pairs.size() + got.unmatched_rows.size() == rows);
    CHECK(got.pairs.size() + got.unmatched_cols.size() == cols);
    for (const auto& [r, c] : got.pairs) {
      CHECK(cost[static_cast<size_t>(r)][static_cast<size_t>(c)] <= gate);
    }
  }
}

#pragma once

#include <utility>
#include <vector>

namespace avsec {

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

/// Optimal one-to-one assignment over a dense rectangular cost matrix.
/// Entries with cost > gate (or non-finite) are forbidden. Among all gated
/// matchings the solver maximizes cardinality first, then minimizes total
/// cost. Hungarian algorithm with row/column potentials; forbidden entries
/// carry a large surrogate cost that dominates any achievable real total.
Assignment solve_assignment(const std::vector<std::vector<double>>& cost, double gate);

}  // namespace avsec

#include "avsec/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace avsec {

namespace {
constexpr double kForbidden = 1e13;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

Assignment solve_assignment(const std::vector<std::vector<double>>& cost, double gate) {
  const int rows = static_cast<int>(cost.size());
  const int cols = rows ? static_cast<int>(cost[0].size()) : 0;
  for (const auto& r : cost)
    if (static_cast<int>(r.size()) != cols) throw std::invalid_argument("ragged cost matrix");

  Assignment out;
  if (rows == 0 || cols == 0) {
    for (int i = 0; i < rows; ++i) out.unmatched_rows.push_back(i);
    for (int j = 0; j < cols; ++j) out.unmatched_cols.push_back(j);
    return out;
  }

  // Solve with rows as the smaller side; transpose if needed.
  const bool transposed = rows > cols;
  const int n = transposed ? cols : rows;
  const int m = transposed ? rows : cols;
  auto at = [&](int i, int j) -> double {
    const double c = transposed ? cost[j][i] : cost[i][j];
    if (!std::isfinite(c) || c > gate) return kForbidden;
    return c;
  };

  // 1-indexed potentials; p[j] = row matched to column j (0 = none).
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(rows, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const int r = transposed ? j - 1 : p[j] - 1;
    const int c = transposed ? p[j] - 1 : j - 1;
    // entries forced through forbidden cells are unmatched in truth
    double raw = cost[r][c];
    if (std::isfinite(raw) && raw <= gate) row_to_col[r] = c;
  }

  std::vector<char> col_used(cols, 0);
  for (int r = 0; r < rows; ++r) {
    if (row_to_col[r] < 0) {
      out.unmatched_rows.push_back(r);
      continue;
    }
    out.pairs.emplace_back(r, row_to_col[r]);
    out.total_cost += cost[r][row_to_col[r]];
    col_used[row_to_col[r]] = 1;
  }
  for (int j = 0; j < cols; ++j)
    if (!col_used[j]) out.unmatched_cols.push_back(j);
  return out;
}

}  // namespace avsec

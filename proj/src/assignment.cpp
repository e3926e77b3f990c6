#include "bytestorm/assignment.hpp"

#include <cmath>
#include <numeric>

#include "bytestorm/error.hpp"

namespace bytestorm::track {

double AssignmentResult::total_cost() const {
  double total = 0.0;
  for (const auto& m : matches) total += m.cost;
  return total;
}

// Shortest augmenting path formulation with row/column potentials, O(n^3).
std::vector<std::size_t> hungarian_square(std::size_t n, const std::vector<double>& cost) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

AssignmentResult solve_assignment(const CostMatrix& cost, double max_cost) {
  if (cost.values.size() != cost.rows * cost.cols) {
    throw Error(ErrorKind::DimensionMismatch, "cost matrix storage does not match its shape");
  }
  AssignmentResult result;
  const std::size_t rows = cost.rows;
  const std::size_t cols = cost.cols;
  if (rows == 0 || cols == 0) {
    result.unmatched_rows.resize(rows);
    std::iota(result.unmatched_rows.begin(), result.unmatched_rows.end(), 0);
    result.unmatched_cols.resize(cols);
    std::iota(result.unmatched_cols.begin(), result.unmatched_cols.end(), 0);
    return result;
  }

  double abs_sum = 0.0;
  for (double c : cost.values) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "cost matrix must be finite");
    abs_sum += std::fabs(c);
  }
  const double limit = std::isfinite(max_cost) ? max_cost : abs_sum + 1.0;
  const std::size_t n = rows + cols;
  const double forbidden =
      (std::fabs(limit) + 1.0) * static_cast<double>(n + 1) + abs_sum + 1.0;

  // [ real costs | row dummies ]
  // [ col dummies | zeros      ]
  std::vector<double> ext(n * n, forbidden);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double value = cost(r, c);
      if (value <= max_cost) ext[r * n + c] = value;
    }
    ext[r * n + cols + r] = limit / 2.0;
  }
  for (std::size_t k = 0; k < cols; ++k) {
    ext[(rows + k) * n + k] = limit / 2.0;
    for (std::size_t m = 0; m < rows; ++m) ext[(rows + k) * n + cols + m] = 0.0;
  }

  const std::vector<std::size_t> assigned = hungarian_square(n, ext);
  std::vector<char> col_taken(cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = assigned[r];
    if (c < cols && cost(r, c) <= max_cost) {
      result.matches.push_back(Match{r, c, cost(r, c)});
      col_taken[c] = 1;
    } else {
      result.unmatched_rows.push_back(r);
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_taken[c]) result.unmatched_cols.push_back(c);
  }
  return result;
}

}  // namespace bytestorm::track

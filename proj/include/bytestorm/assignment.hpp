#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace bytestorm::track {

/// Row-major dense cost matrix.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  CostMatrix() = default;
  CostMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct Match {
  std::size_t row = 0;
  std::size_t col = 0;
  double cost = 0.0;
};

struct AssignmentResult {
  std::vector<Match> matches;  // ascending row order
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;

  double total_cost() const;
};

/// Optimal linear assignment with a cost ceiling. Entries above `max_cost`
/// are forbidden. Leaving a row or column unassigned costs max_cost / 2, so a
/// pair is worth matching whenever its cost does not exceed max_cost; with an
/// infinite ceiling the result is the minimum-cost maximum matching.
AssignmentResult solve_assignment(const CostMatrix& cost,
                                  double max_cost = std::numeric_limits<double>::infinity());

/// Hungarian method on a square matrix; returns the column for every row.
std::vector<std::size_t> hungarian_square(std::size_t n, const std::vector<double>& cost);

}  // namespace bytestorm::track

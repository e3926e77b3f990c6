// Independent reference implementations used by the unit and acceptance
// tests. They favour directness over speed and share no code with the
// library.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

/// Best objective over every partial one-to-one matching of a rows x cols
/// matrix. With an infinite ceiling only maximum-cardinality matchings count
/// and the objective is their total cost; otherwise pairs above the ceiling
/// are forbidden and the objective is sum(cost - ceiling), so matching a pair
/// pays off exactly when it does not exceed the ceiling.
inline double brute_force_assignment(const std::vector<double>& cost, std::size_t rows,
                                     std::size_t cols, double ceiling) {
  const bool unbounded = std::isinf(ceiling);
  const std::size_t need = std::min(rows, cols);
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> used(cols, 0);
  auto rec = [&](auto&& self, std::size_t r, double acc, std::size_t matched) -> void {
    if (r == rows) {
      if (unbounded && matched != need) return;
      best = std::min(best, acc);
      return;
    }
    self(self, r + 1, acc, matched);  // row r left unmatched
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c]) continue;
      const double v = cost[r * cols + c];
      if (!unbounded && v > ceiling) continue;
      used[c] = 1;
      self(self, r + 1, acc + (unbounded ? v : v - ceiling), matched + 1);
      used[c] = 0;
    }
  };
  rec(rec, 0, 0.0, 0);
  return best;
}

/// Initial great-circle bearing in degrees from unit vectors, in long double:
/// the bearing is the angle between the local north vector at `a` and the
/// direction of the great circle toward `b`.
inline long double bearing_vec(long double lat1, long double lon1, long double lat2,
                               long double lon2) {
  const long double k = 3.141592653589793238462643383279502884L / 180.0L;
  auto unit = [k](long double lat, long double lon) {
    return std::array<long double, 3>{std::cos(lat * k) * std::cos(lon * k),
                                      std::cos(lat * k) * std::sin(lon * k), std::sin(lat * k)};
  };
  auto cross = [](const std::array<long double, 3>& x, const std::array<long double, 3>& y) {
    return std::array<long double, 3>{x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2],
                                      x[0] * y[1] - x[1] * y[0]};
  };
  auto dot = [](const std::array<long double, 3>& x, const std::array<long double, 3>& y) {
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
  };
  const auto a = unit(lat1, lon1);
  const auto b = unit(lat2, lon2);
  const std::array<long double, 3> pole{0.0L, 0.0L, 1.0L};
  const auto east = cross(pole, a);      // local east (unnormalized)
  const auto north = cross(a, east);     // local north (same scale)
  const auto plane = cross(cross(a, b), a);  // tangent toward b
  long double deg = std::atan2(dot(plane, east), dot(plane, north)) / k;
  if (deg < 0) deg += 360.0L;
  return deg;
}

/// Track smoothness from straight-line definitions in long double: bearings
/// between successive distinct points, wrapped variations, population
/// deviation with divisor (number of points - 2).
inline long double smoothness(std::vector<std::array<long double, 2>> pts) {
  std::vector<std::array<long double, 2>> distinct;
  for (const auto& p : pts) {
    if (distinct.empty() || distinct.back() != p) distinct.push_back(p);
  }
  std::vector<long double> bearings;
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    bearings.push_back(
        bearing_vec(distinct[i][0], distinct[i][1], distinct[i + 1][0], distinct[i + 1][1]));
  }
  std::vector<long double> var;
  for (std::size_t i = 0; i + 1 < bearings.size(); ++i) {
    long double d = std::fabs(bearings[i + 1] - bearings[i]);
    if (d > 180.0L) d = 360.0L - d;
    var.push_back(d);
  }
  const long double n = static_cast<long double>(var.size());
  long double mean = 0;
  for (auto v : var) mean += v;
  mean /= n;
  long double ss = 0;
  for (auto v : var) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

inline double bce(const std::vector<double>& p, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    long double q = std::clamp<long double>(p[i], 1e-7L, 1.0L - 1e-7L);
    s += -(y[i] * std::log(q) + (1.0L - y[i]) * std::log(1.0L - q));
  }
  return static_cast<double>(s / p.size());
}

inline double mae(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(static_cast<long double>(a[i]) - b[i]);
  return static_cast<double>(s / a.size());
}

/// Textbook Pearson correlation.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

/// Non-dominated indices by direct pairwise comparison. Objectives are
/// {pod, far, r_enp, r_wnp}; far is minimized, the rest maximized.
inline std::vector<std::size_t> pareto(const std::vector<std::array<double, 4>>& objs) {
  auto oriented = [](const std::array<double, 4>& o) {
    return std::array<double, 4>{o[0], -o[1], o[2], o[3]};
  };
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < objs.size() && !dominated; ++j) {
      if (i == j) continue;
      const auto a = oriented(objs[j]), b = oriented(objs[i]);
      bool all_ge = true, some_gt = false;
      for (int k = 0; k < 4; ++k) {
        if (a[k] < b[k]) all_ge = false;
        if (a[k] > b[k]) some_gt = true;
      }
      dominated = all_ge && some_gt;
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

}  // namespace oracle

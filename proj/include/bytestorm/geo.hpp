#pragma once

#include <span>

namespace bytestorm::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Geographic position. Longitudes are kept in [0, 360).
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  static GeoPoint make(double lat, double lon);

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

double normalize_lon(double lon);

double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// Initial great-circle bearing from a to b, degrees in [0, 360).
/// Throws Error(Degenerate) when the points coincide.
double bearing_deg(const GeoPoint& a, const GeoPoint& b);

/// Smallest angle between two headings, in [0, 180].
double bearing_variation_deg(double t1, double t2);

/// Population standard deviation (divisor N-2) of successive bearing
/// variations along a track, in degrees. Consecutive repeated points are
/// collapsed first; at least 4 distinct points must remain.
double track_smoothness_deg(std::span<const GeoPoint> points);

/// Regular lat/lon grid. Row 0 is the northernmost band, column 0 the
/// westernmost; (row, col) addresses cell centers.
struct GridSpec {
  double lat0 = 70.0;
  double lon0 = 100.0;
  double d = 0.25;
  int rows = 280;
  int cols = 880;

  void validate() const;
  bool contains(double row, double col) const {
    return row >= 0.0 && col >= 0.0 && row < rows && col < cols;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

GeoPoint grid_to_geo(int row, int col, const GridSpec& g);

/// Real-valued variant for sub-cell positions; no bounds check.
GeoPoint grid_to_geo(double row, double col, const GridSpec& g);

/// Nearest cell (round half up on both axes). Throws Error(OutOfRange)
/// when the point falls outside the grid.
Cell geo_to_grid(const GeoPoint& p, const GridSpec& g);

/// Fractional (row, col) of a point; may lie outside the grid.
struct GridPos {
  double row = 0.0;
  double col = 0.0;
};
GridPos geo_to_grid_pos(const GeoPoint& p, const GridSpec& g);

}  // namespace bytestorm::geo

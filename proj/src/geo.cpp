#include "bytestorm/geo.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bytestorm/error.hpp"

namespace bytestorm::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

double normalize_lon(double lon) {
  double out = std::fmod(lon, 360.0);
  if (out < 0.0) out += 360.0;
  if (out >= 360.0) out -= 360.0;
  return out;
}

GeoPoint GeoPoint::make(double lat, double lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !std::isfinite(lon)) {
    throw Error(ErrorKind::OutOfRange, "latitude outside [-90, 90]");
  }
  return GeoPoint{lat, normalize_lon(lon)};
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlam = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlam / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double bearing_deg(const GeoPoint& a, const GeoPoint& b) {
  if (a.lat == b.lat && normalize_lon(a.lon) == normalize_lon(b.lon)) {
    throw Error(ErrorKind::Degenerate, "bearing between coincident points");
  }
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dlam = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlam) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) -
                   std::sin(phi1) * std::cos(phi2) * std::cos(dlam);
  double deg = std::atan2(y, x) * kRadToDeg;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

double bearing_variation_deg(double t1, double t2) {
  const double diff = std::fmod(std::fabs(t2 - t1), 360.0);
  return std::min(diff, 360.0 - diff);
}

double track_smoothness_deg(std::span<const GeoPoint> points) {
  std::vector<GeoPoint> distinct;
  distinct.reserve(points.size());
  for (const auto& p : points) {
    if (distinct.empty() || !(distinct.back().lat == p.lat &&
                              normalize_lon(distinct.back().lon) == normalize_lon(p.lon))) {
      distinct.push_back(p);
    }
  }
  const std::size_t n = distinct.size();
  if (n < 4) {
    throw Error(ErrorKind::InvalidArgument,
                "track smoothness needs at least 4 distinct points, got " +
                    std::to_string(n));
  }
  std::vector<double> bearings(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    bearings[i] = bearing_deg(distinct[i], distinct[i + 1]);
  }
  std::vector<double> variations(n - 2);
  double mean = 0.0;
  for (std::size_t i = 0; i + 1 < bearings.size(); ++i) {
    variations[i] = bearing_variation_deg(bearings[i], bearings[i + 1]);
    mean += variations[i];
  }
  mean /= static_cast<double>(variations.size());
  double ss = 0.0;
  for (double v : variations) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(variations.size()));
}

void GridSpec::validate() const {
  if (!(d > 0.0) || rows <= 0 || cols <= 0) {
    throw Error(ErrorKind::InvalidArgument, "grid spec needs d > 0 and positive dims");
  }
}

GeoPoint grid_to_geo(int row, int col, const GridSpec& g) {
  if (row < 0 || col < 0 || row >= g.rows || col >= g.cols) {
    throw Error(ErrorKind::OutOfRange, "grid index (" + std::to_string(row) + ", " +
                                           std::to_string(col) + ") outside grid");
  }
  return grid_to_geo(static_cast<double>(row), static_cast<double>(col), g);
}

GeoPoint grid_to_geo(double row, double col, const GridSpec& g) {
  return GeoPoint{g.lat0 - row * g.d, normalize_lon(g.lon0 + col * g.d)};
}

GridPos geo_to_grid_pos(const GeoPoint& p, const GridSpec& g) {
  // Offset measured on the branch centered on the grid's mid-longitude.
  const double mid = 0.5 * g.cols * g.d;
  const double dlon = normalize_lon(p.lon - g.lon0 - mid + 180.0) - 180.0 + mid;
  return GridPos{(g.lat0 - p.lat) / g.d, dlon / g.d};
}

Cell geo_to_grid(const GeoPoint& p, const GridSpec& g) {
  const GridPos pos = geo_to_grid_pos(p, g);
  const double r = std::floor(pos.row + 0.5);
  const double c = std::floor(pos.col + 0.5);
  if (r < 0 || c < 0 || r >= g.rows || c >= g.cols) {
    throw Error(ErrorKind::OutOfRange, "point outside grid domain");
  }
  return Cell{static_cast<int>(r), static_cast<int>(c)};
}

}  // namespace bytestorm::geo

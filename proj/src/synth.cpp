#include "bytestorm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bytestorm/error.hpp"

namespace bytestorm::synth {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kBaseMslp = 1010.0;

struct Storm {
  std::vector<geo::GeoPoint> path;
  std::vector<char> dropped;
};

}  // namespace

void ScenarioConfig::validate() const {
  grid.validate();
  if (n_storms < 0 || steps < 1) throw Error(ErrorKind::Config, "need n_storms >= 0 and steps >= 1");
  if (!(speed_kmh >= 0.0) || !(well_radius_cells > 0.0) || !(noise_std >= 0.0)) {
    throw Error(ErrorKind::Config, "speed, well radius and noise must be non-negative");
  }
  if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
    throw Error(ErrorKind::Config, "dropout_prob must lie in [0, 1]");
  }
  if (!is_synoptic(start)) throw Error(ErrorKind::Config, "scenario start must be 6-hourly");
  const double south = grid.lat0 - (grid.rows - 5) * grid.d;
  const double north = grid.lat0 - 4.0 * grid.d;
  if (!(genesis_lat_min <= genesis_lat_max) || genesis_lat_min < south ||
      genesis_lat_max > north) {
    throw Error(ErrorKind::Config, "genesis latitude window must lie inside the grid");
  }
}

geo::GeoPoint destination(const geo::GeoPoint& p, double bearing_deg, double km) {
  const double delta = km / geo::kEarthRadiusKm;
  const double theta = bearing_deg * kDeg;
  const double phi1 = p.lat * kDeg;
  const double lam1 = p.lon * kDeg;
  const double sin_phi2 =
      std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lam2 = lam1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                                        std::cos(delta) - std::sin(phi1) * sin_phi2);
  return geo::GeoPoint{phi2 / kDeg, geo::normalize_lon(lam2 / kDeg)};
}

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const geo::GridSpec& g = cfg.grid;

  // Storms start in separate longitude bands at the eastern end of each band.
  std::vector<Storm> storms(static_cast<std::size_t>(cfg.n_storms));
  const double west = g.lon0 + 4.0 * g.d;
  const double east = g.lon0 + (g.cols - 5) * g.d;
  const double band = cfg.n_storms > 0 ? (east - west) / cfg.n_storms : 0.0;
  for (int s = 0; s < cfg.n_storms; ++s) {
    Storm& storm = storms[static_cast<std::size_t>(s)];
    const double lat =
        cfg.genesis_lat_min + (cfg.genesis_lat_max - cfg.genesis_lat_min) * unit(rng);
    const double lon = west + band * (s + 0.85 + 0.1 * unit(rng));
    double heading = 285.0 + 10.0 * unit(rng);
    geo::GeoPoint pos{lat, geo::normalize_lon(lon)};
    for (int k = 0; k < cfg.steps; ++k) {
      const geo::GridPos gp = geo::geo_to_grid_pos(pos, g);
      if (gp.row < 0.0 || gp.col < 0.0 || gp.row > g.rows - 1 || gp.col > g.cols - 1) break;
      storm.path.push_back(pos);
      storm.dropped.push_back(unit(rng) < cfg.dropout_prob ? 1 : 0);
      heading += cfg.turn_rate_deg * normal(rng);
      pos = destination(pos, heading, cfg.speed_kmh * 6.0);
    }
  }

  Scenario out;
  out.series.spec = g;
  out.series.vars = {data::kClimateVars[0], data::kClimateVars[1]};
  const std::size_t plane = static_cast<std::size_t>(g.rows) * static_cast<std::size_t>(g.cols);
  const double sigma = cfg.well_radius_cells;
  const int reach = static_cast<int>(std::ceil(5.0 * sigma));
  for (int k = 0; k < cfg.steps; ++k) {
    data::Frame frame;
    frame.time = cfg.start + k * kStep;
    std::vector<double> rv(plane, 0.0), mslp(plane);
    for (int r = 0; r < g.rows; ++r) {
      // Smooth base: pressure rises gently toward the pole.
      const double base = kBaseMslp + 2.0 * static_cast<double>(g.rows - 1 - r) / g.rows;
      for (int c = 0; c < g.cols; ++c) mslp[static_cast<std::size_t>(r) * g.cols + c] = base;
    }
    for (const Storm& storm : storms) {
      if (k >= static_cast<int>(storm.path.size()) || storm.dropped[static_cast<std::size_t>(k)]) {
        continue;
      }
      const geo::GridPos center = geo::geo_to_grid_pos(storm.path[static_cast<std::size_t>(k)], g);
      const int r0 = static_cast<int>(std::floor(center.row));
      const int c0 = static_cast<int>(std::floor(center.col));
      for (int r = std::max(0, r0 - reach); r <= std::min(g.rows - 1, r0 + reach); ++r) {
        for (int c = std::max(0, c0 - reach); c <= std::min(g.cols - 1, c0 + reach); ++c) {
          const double dr = r - center.row, dc = c - center.col;
          const double w = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
          const std::size_t i = static_cast<std::size_t>(r) * g.cols + c;
          mslp[i] -= cfg.well_depth * w;
          rv[i] += cfg.vorticity_amplitude * w;
        }
      }
    }
    frame.values.resize(2 * plane);
    for (std::size_t i = 0; i < plane; ++i) {
      double v = rv[i], p = mslp[i];
      if (cfg.noise_std > 0.0) {
        v += cfg.noise_std * cfg.vorticity_amplitude / cfg.well_depth * normal(rng);
        p += cfg.noise_std * normal(rng);
      }
      frame.values[i] = static_cast<float>(v);
      frame.values[plane + i] = static_cast<float>(p);
    }
    out.series.frames.push_back(std::move(frame));
  }

  for (std::size_t s = 0; s < storms.size(); ++s) {
    const Storm& storm = storms[s];
    if (storm.path.empty()) continue;
    Track t;
    t.id = "S" + std::to_string(s + 1);
    t.state = TrackState::Finished;
    for (std::size_t k = 0; k < storm.path.size(); ++k) {
      const geo::GridPos gp = geo::geo_to_grid_pos(storm.path[k], g);
      t.points.push_back(TrackPoint{cfg.start + static_cast<int>(k) * kStep, storm.path[k],
                                    gp.row, gp.col, 1.0, std::nullopt});
    }
    out.truth.push_back(std::move(t));
    out.suppressed.push_back(storm.dropped);
  }
  return out;
}

}  // namespace bytestorm::synth

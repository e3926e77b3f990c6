#pragma once

#include <cstdint>
#include <vector>

#include "bytestorm/data.hpp"
#include "bytestorm/track_types.hpp"

namespace bytestorm::synth {

struct ScenarioConfig {
  int n_storms = 3;
  int steps = 40;
  double speed_kmh = 20.0;
  double turn_rate_deg = 5.0;
  double well_depth = 20.0;       // hPa
  double vorticity_amplitude = 5e-4;
  double well_radius_cells = 5.0;
  double noise_std = 0.0;
  double dropout_prob = 0.0;
  std::uint64_t seed = 1;
  Timestamp start = make_time(2001, 8, 1);
  geo::GridSpec grid{};
  /// Genesis latitude window; storms start south of 30N unless overridden.
  double genesis_lat_min = 10.0;
  double genesis_lat_max = 20.0;

  void validate() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Scenario {
  data::GridSeries series;
  std::vector<Track> truth;
  /// Per truth track and point: true when the storm signature was removed
  /// from the fields at that step.
  std::vector<std::vector<char>> suppressed;
};

/// Deterministic synthetic storms over a smooth background. Each storm walks
/// west-northwest along slowly turning great circles; MSLP gets a Gaussian
/// well and RV850 a Gaussian bump at the exact center.
Scenario generate(const ScenarioConfig& cfg);

/// Step along a great circle from `p` by `km` at `bearing_deg`.
geo::GeoPoint destination(const geo::GeoPoint& p, double bearing_deg, double km);

}  // namespace bytestorm::synth

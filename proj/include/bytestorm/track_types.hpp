#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bytestorm/data.hpp"
#include "bytestorm/geo.hpp"
#include "bytestorm/time.hpp"

namespace bytestorm {

/// Axis-aligned square box in cell units, centered on (row, col).
struct Box {
  double row = 0.0;
  double col = 0.0;
  double side = 21.0;
};

struct Detection {
  Timestamp time;
  double row = 0.0;
  double col = 0.0;
  geo::GeoPoint geo;
  double score = 0.0;
  double bbox_size = 21.0;

  Box box() const { return Box{row, col, bbox_size}; }
};

struct TrackPoint {
  Timestamp time;
  geo::GeoPoint geo;
  double row = 0.0;
  double col = 0.0;
  double score = 1.0;
  std::optional<double> msw;
};

enum class TrackState { Active, Lost, Finished };

struct Track {
  std::string id;
  std::vector<TrackPoint> points;
  TrackState state = TrackState::Active;
  int frames_since_match = 0;
  data::Basin basin = data::Basin::Unknown;

  const TrackPoint& genesis() const { return points.front(); }
};

/// Groups best-track points by storm id into time-ordered tracks, in order of
/// first appearance. Grid positions are derived from `spec`.
std::vector<Track> tracks_from_best_track(std::span<const data::BestTrackPoint> points,
                                          const geo::GridSpec& spec);

}  // namespace bytestorm

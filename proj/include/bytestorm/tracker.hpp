#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bytestorm/assignment.hpp"
#include "bytestorm/track_types.hpp"

namespace bytestorm::track {

enum class MotionModel { None, ConstantVelocity };

MotionModel parse_motion_model(std::string_view s);
std::string_view to_string(MotionModel m);

struct ByteParams {
  double track_threshold = 0.7;
  double match_threshold = 0.8;  // ceiling on 1 - IoU
  int track_buffer = 1;
  double low_score_floor = 0.5;
  double bbox_size = 21.0;
  double max_displacement_km = 400.0;
  int min_track_steps = 12;
  std::optional<double> genesis_lat_max = 30.0;
  bool exclude_land_genesis = false;
  MotionModel motion = MotionModel::ConstantVelocity;

  void validate() const;
  friend bool operator==(const ByteParams&, const ByteParams&) = default;
};

/// Boolean land/sea mask on a regular grid.
struct LandMask {
  geo::GridSpec spec;
  std::vector<std::uint8_t> land;  // rows x cols

  bool is_land(const geo::GeoPoint& p) const;
};

double iou(const Box& a, const Box& b);

/// Constant-velocity extrapolation from the last two points, projected
/// frames_since_match + 1 steps past the last point.
Box predict_box(const Track& track, double bbox_size,
                MotionModel motion = MotionModel::ConstantVelocity);

/// Live tracker state between frames.
struct TrackerState {
  std::vector<Track> tracks;  // active and lost
  std::vector<Track> finished;
  std::uint64_t next_id = 1;
  std::optional<Timestamp> last_time;
};

/// Advances the tracker by one frame. Frames skipped since the previous call
/// are processed as empty frames. Throws when `time` does not advance on the
/// 6-hourly cadence.
void byte_step(TrackerState& state, Timestamp time, std::span<const Detection> dets,
               const ByteParams& p);

/// Finishes every live track and returns all tracks ordered by genesis.
std::vector<Track> finish_all(TrackerState& state);

/// Folds byte_step over detections grouped by timestamp; gaps in the
/// 6-hourly sequence become empty frames.
std::vector<Track> run_tracker(std::span<const Detection> dets, const ByteParams& p);

/// Genesis-latitude, land-genesis and minimum-length filters. Throws
/// std::logic_error if a track violates the displacement gate.
std::vector<Track> apply_physical_filters(std::vector<Track> tracks, const ByteParams& p,
                                          const LandMask* land = nullptr);

}  // namespace bytestorm::track

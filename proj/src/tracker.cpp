#include "bytestorm/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "bytestorm/error.hpp"

namespace bytestorm::track {

namespace {

constexpr double kForbidden = 2.0;

std::uint64_t numeric_id(const std::string& id) {
  try {
    return std::stoull(id);
  } catch (...) {
    return 0;
  }
}

void append_detection(Track& t, const Detection& d) {
  t.points.push_back(TrackPoint{d.time, d.geo, d.row, d.col, d.score, std::nullopt});
  t.state = TrackState::Active;
  t.frames_since_match = 0;
}

CostMatrix association_costs(const std::vector<Track>& tracks,
                             const std::vector<std::size_t>& track_idx,
                             const std::vector<const Detection*>& dets,
                             const ByteParams& p) {
  CostMatrix cost(track_idx.size(), dets.size(), kForbidden);
  for (std::size_t i = 0; i < track_idx.size(); ++i) {
    const Track& t = tracks[track_idx[i]];
    const Box pred = predict_box(t, p.bbox_size, p.motion);
    for (std::size_t j = 0; j < dets.size(); ++j) {
      const Detection& d = *dets[j];
      if (geo::haversine_km(t.points.back().geo, d.geo) > p.max_displacement_km) continue;
      cost(i, j) = 1.0 - iou(pred, Box{d.row, d.col, p.bbox_size});
    }
  }
  return cost;
}

void advance_frame(TrackerState& state, Timestamp time, std::span<const Detection> dets,
                   const ByteParams& p) {
  std::vector<const Detection*> high, low;
  for (const auto& d : dets) {
    if (d.score >= p.track_threshold) {
      high.push_back(&d);
    } else if (d.score >= p.low_score_floor) {
      low.push_back(&d);
    }
  }

  auto& tracks = state.tracks;
  std::vector<char> matched(tracks.size(), 0);

  // First association: every live track against high-score detections.
  std::vector<std::size_t> pool(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) pool[i] = i;
  const AssignmentResult first =
      solve_assignment(association_costs(tracks, pool, high, p), p.match_threshold);
  std::vector<char> high_used(high.size(), 0);
  for (const auto& m : first.matches) {
    append_detection(tracks[pool[m.row]], *high[m.col]);
    matched[pool[m.row]] = 1;
    high_used[m.col] = 1;
  }

  // Second association: still-unmatched active tracks against low-score ones.
  std::vector<std::size_t> remaining;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!matched[i] && tracks[i].state == TrackState::Active) remaining.push_back(i);
  }
  const AssignmentResult second = solve_assignment(
      association_costs(tracks, remaining, low, p), std::min(p.match_threshold, 0.5));
  for (const auto& m : second.matches) {
    append_detection(tracks[remaining[m.row]], *low[m.col]);
    matched[remaining[m.row]] = 1;
  }

  std::vector<Track> live;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    Track& t = tracks[i];
    if (!matched[i]) {
      ++t.frames_since_match;
      if (t.frames_since_match > p.track_buffer) {
        t.state = TrackState::Finished;
        state.finished.push_back(std::move(t));
        continue;
      }
      t.state = TrackState::Lost;
    }
    live.push_back(std::move(t));
  }

  for (std::size_t j = 0; j < high.size(); ++j) {
    if (high_used[j]) continue;
    Track t;
    t.id = std::to_string(state.next_id++);
    append_detection(t, *high[j]);
    live.push_back(std::move(t));
  }
  state.tracks = std::move(live);
  state.last_time = time;
}

}  // namespace

MotionModel parse_motion_model(std::string_view s) {
  if (s == "none") return MotionModel::None;
  if (s == "constant_velocity") return MotionModel::ConstantVelocity;
  throw Error(ErrorKind::Config, "unknown motion model '" + std::string(s) + "'");
}

std::string_view to_string(MotionModel m) {
  return m == MotionModel::None ? "none" : "constant_velocity";
}

void ByteParams::validate() const {
  if (!(low_score_floor > 0.0 && low_score_floor <= track_threshold && track_threshold < 1.0)) {
    throw Error(ErrorKind::Config, "need 0 < low_score_floor <= track_threshold < 1");
  }
  if (!(match_threshold > 0.0 && match_threshold <= 1.0)) {
    throw Error(ErrorKind::Config, "match_threshold must lie in (0, 1]");
  }
  if (track_buffer < 0) throw Error(ErrorKind::Config, "track_buffer must be >= 0");
  if (min_track_steps < 1) throw Error(ErrorKind::Config, "min_track_steps must be >= 1");
  if (!(bbox_size > 0.0) || !(max_displacement_km > 0.0)) {
    throw Error(ErrorKind::Config, "bbox_size and max_displacement_km must be positive");
  }
}

bool LandMask::is_land(const geo::GeoPoint& p) const {
  const geo::GridPos pos = geo::geo_to_grid_pos(p, spec);
  const double r = std::floor(pos.row + 0.5);
  const double c = std::floor(pos.col + 0.5);
  if (r < 0 || c < 0 || r >= spec.rows || c >= spec.cols) return false;
  return land[static_cast<std::size_t>(r) * static_cast<std::size_t>(spec.cols) +
              static_cast<std::size_t>(c)] != 0;
}

double iou(const Box& a, const Box& b) {
  const double ha = a.side / 2.0, hb = b.side / 2.0;
  const double ih = std::min(a.row + ha, b.row + hb) - std::max(a.row - ha, b.row - hb);
  const double iw = std::min(a.col + ha, b.col + hb) - std::max(a.col - ha, b.col - hb);
  if (ih <= 0.0 || iw <= 0.0) return 0.0;
  const double inter = ih * iw;
  return inter / (a.side * a.side + b.side * b.side - inter);
}

Box predict_box(const Track& track, double bbox_size, MotionModel motion) {
  if (track.points.empty()) throw Error(ErrorKind::InvalidArgument, "empty track");
  const TrackPoint& last = track.points.back();
  Box box{last.row, last.col, bbox_size};
  if (motion == MotionModel::None || track.points.size() < 2) return box;
  const TrackPoint& prev = track.points[track.points.size() - 2];
  const double span = static_cast<double>(steps_between(prev.time, last.time));
  const double ahead = static_cast<double>(track.frames_since_match + 1);
  box.row += (last.row - prev.row) / span * ahead;
  box.col += (last.col - prev.col) / span * ahead;
  return box;
}

void byte_step(TrackerState& state, Timestamp time, std::span<const Detection> dets,
               const ByteParams& p) {
  for (const auto& d : dets) {
    if (d.time != time) {
      throw Error(ErrorKind::InvalidArgument, "detection timestamp differs from frame time");
    }
  }
  if (state.last_time) {
    if (!(*state.last_time < time)) {
      throw Error(ErrorKind::InvalidArgument,
                  "out-of-order frame " + format_iso(time) + " after " +
                      format_iso(*state.last_time));
    }
    const std::int64_t gap = steps_between(*state.last_time, time);
    for (std::int64_t k = 1; k < gap; ++k) {
      advance_frame(state, *state.last_time + kStep, {}, p);
    }
  } else if (!is_synoptic(time)) {
    throw Error(ErrorKind::InvalidArgument, "frame " + format_iso(time) + " is not 6-hourly");
  }
  advance_frame(state, time, dets, p);
}

std::vector<Track> finish_all(TrackerState& state) {
  std::vector<Track> out = std::move(state.finished);
  for (auto& t : state.tracks) {
    t.state = TrackState::Finished;
    out.push_back(std::move(t));
  }
  state.tracks.clear();
  state.finished.clear();
  std::stable_sort(out.begin(), out.end(), [](const Track& a, const Track& b) {
    if (a.genesis().time != b.genesis().time) return a.genesis().time < b.genesis().time;
    return numeric_id(a.id) < numeric_id(b.id);
  });
  return out;
}

std::vector<Track> run_tracker(std::span<const Detection> dets, const ByteParams& p) {
  p.validate();
  std::map<Timestamp, std::vector<Detection>> frames;
  for (const auto& d : dets) frames[d.time].push_back(d);
  TrackerState state;
  for (const auto& [time, frame] : frames) byte_step(state, time, frame, p);
  return finish_all(state);
}

std::vector<Track> apply_physical_filters(std::vector<Track> tracks, const ByteParams& p,
                                          const LandMask* land) {
  if (p.exclude_land_genesis && land == nullptr) {
    throw Error(ErrorKind::Config, "land-genesis filter requested without a land mask");
  }
  std::vector<Track> kept;
  for (auto& t : tracks) {
    if (t.points.empty()) continue;
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      if (geo::haversine_km(t.points[i - 1].geo, t.points[i].geo) > p.max_displacement_km) {
        throw std::logic_error("track " + t.id + " violates the displacement gate");
      }
    }
    if (p.genesis_lat_max && t.genesis().geo.lat > *p.genesis_lat_max) continue;
    if (p.exclude_land_genesis && land->is_land(t.genesis().geo)) continue;
    if (static_cast<int>(t.points.size()) < p.min_track_steps) continue;
    kept.push_back(std::move(t));
  }
  return kept;
}

}  // namespace bytestorm::track

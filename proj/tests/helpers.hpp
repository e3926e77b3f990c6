// Small fixtures shared by the test binaries.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "bytestorm/data.hpp"
#include "bytestorm/geo.hpp"
#include "bytestorm/track_types.hpp"

namespace fixture {

using namespace bytestorm;

inline std::vector<float> random_map(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(static_cast<std::size_t>(data::kChannels) * rows * cols);
  for (auto& x : v) x = u(rng);
  return v;
}

inline data::PatchSample random_positive(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  std::uniform_int_distribution<int> cell(0, data::kPatchSize - 1);
  data::PatchSample s;
  s.map_time = make_time(2001, 8, 1);
  s.pixels.resize(data::kPatchPixels);
  for (auto& x : s.pixels) x = u(rng);
  s.label = 1;
  s.kind = data::PatchKind::Cyclone;
  s.center = geo::Cell{cell(rng), cell(rng)};
  return s;
}

inline data::BestTrackPoint best_point(const std::string& id, Timestamp t, geo::GeoPoint p) {
  data::BestTrackPoint b;
  b.storm_id = id;
  b.time = t;
  b.center = p;
  b.nature = data::Nature::TS;
  return b;
}

/// Straight track of `n` 6-hourly points from (lat, lon) moving by (dlat, dlon).
inline Track line_track(const std::string& id, Timestamp start, int n, double lat, double lon,
                        double dlat, double dlon, const geo::GridSpec& g = {}) {
  Track t;
  t.id = id;
  t.state = TrackState::Finished;
  for (int i = 0; i < n; ++i) {
    const geo::GeoPoint p = geo::GeoPoint::make(lat + i * dlat, lon + i * dlon);
    const geo::GridPos gp = geo::geo_to_grid_pos(p, g);
    t.points.push_back(TrackPoint{start + i * kStep, p, gp.row, gp.col, 1.0, std::nullopt});
  }
  return t;
}

}  // namespace fixture

#include <filesystem>
#include <unistd.h>

namespace fixture {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("bytestorm-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture

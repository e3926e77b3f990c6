#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "bytestorm/detect.hpp"
#include "bytestorm/error.hpp"
#include "bytestorm/synth.hpp"

using namespace bytestorm;
using namespace bytestorm::synth;

namespace {

ScenarioConfig small() {
  ScenarioConfig c;
  c.grid = geo::GridSpec{35.0, 100.0, 0.25, 120, 240};
  return c;
}

geo::Cell argmin_mslp(const data::GridSeries& s, std::size_t frame) {
  const auto f = s.field(frame, 1);
  const auto it = std::min_element(f.begin(), f.end());
  const auto i = static_cast<int>(it - f.begin());
  return geo::Cell{i / s.spec.cols, i % s.spec.cols};
}

}  // namespace

TEST_CASE("destination inverts haversine and bearing") {
  const geo::GeoPoint p{15.0, 140.0};
  for (double bearing : {0.0, 45.0, 180.0, 290.0}) {
    const auto q = destination(p, bearing, 120.0);
    CHECK(geo::haversine_km(p, q) == doctest::Approx(120.0).epsilon(1e-9));
    CHECK(geo::bearing_deg(p, q) == doctest::Approx(bearing).epsilon(1e-9));
  }
}

TEST_CASE("no storms gives flat fields and no truth") {
  auto c = small();
  c.n_storms = 0;
  const auto s = generate(c);
  CHECK(s.truth.empty());
  CHECK(s.series.frames.size() == static_cast<std::size_t>(c.steps));
  const auto rv = s.series.field(0, 0);
  CHECK(std::all_of(rv.begin(), rv.end(), [](float v) { return v == 0.0f; }));
  CHECK_NOTHROW(s.series.validate());
}

TEST_CASE("single storm minimum follows the truth") {
  auto c = small();
  c.n_storms = 1;
  const auto s = generate(c);
  REQUIRE(s.truth.size() == 1);
  const auto& t = s.truth[0];
  for (std::size_t k = 0; k < t.points.size(); ++k) {
    const auto m = argmin_mslp(s.series, k);
    CHECK(std::fabs(m.row - t.points[k].row) <= 1.0);
    CHECK(std::fabs(m.col - t.points[k].col) <= 1.0);
  }
}

TEST_CASE("same seed gives identical scenarios") {
  auto c = small();
  c.noise_std = 0.3;
  c.dropout_prob = 0.2;
  const auto a = generate(c), b = generate(c);
  REQUIRE(a.series.frames.size() == b.series.frames.size());
  for (std::size_t k = 0; k < a.series.frames.size(); ++k) {
    CHECK(a.series.frames[k].values == b.series.frames[k].values);
  }
  CHECK(a.suppressed == b.suppressed);
  c.seed = 2;
  CHECK(generate(c).series.frames[0].values != a.series.frames[0].values);
}

TEST_CASE("truth respects the configured motion") {
  auto c = small();
  c.n_storms = 3;
  const auto s = generate(c);
  REQUIRE(s.truth.size() == 3);
  const double cell_km = c.grid.d * geo::kEarthRadiusKm * M_PI / 180.0;
  for (const auto& t : s.truth) {
    CHECK(t.genesis().geo.lat >= c.genesis_lat_min);
    CHECK(t.genesis().geo.lat <= c.genesis_lat_max);
    CHECK(t.genesis().time == c.start);
    for (std::size_t k = 1; k < t.points.size(); ++k) {
      const double km = geo::haversine_km(t.points[k - 1].geo, t.points[k].geo);
      CHECK(std::fabs(km - c.speed_kmh * 6.0) <= cell_km);
      CHECK(km <= 400.0);
      CHECK(steps_between(t.points[k - 1].time, t.points[k].time) == 1);
    }
  }
}

TEST_CASE("storms leaving the domain are truncated") {
  auto c = small();
  c.n_storms = 1;
  c.steps = 400;
  const auto s = generate(c);
  REQUIRE(s.truth.size() == 1);
  CHECK(s.truth[0].points.size() < 400);
  for (const auto& p : s.truth[0].points) CHECK(c.grid.contains(p.row, p.col));
}

TEST_CASE("physics detector recovers clean storms") {
  auto c = small();
  const auto s = generate(c);
  const auto dets = detect::detect_physics_baseline(s.series, detect::DetectorParams{});
  int total = 0, found = 0;
  for (const auto& t : s.truth) {
    for (const auto& p : t.points) {
      ++total;
      found += std::any_of(dets.begin(), dets.end(), [&](const Detection& d) {
        return d.time == p.time && std::fabs(d.row - p.row) <= 2 && std::fabs(d.col - p.col) <= 2;
      });
    }
  }
  CHECK(found >= 0.99 * total);
}

TEST_CASE("dropout removes the signature") {
  auto c = small();
  c.n_storms = 1;
  c.dropout_prob = 0.3;
  const auto s = generate(c);
  REQUIRE(s.truth.size() == 1);
  int dropped = 0;
  for (std::size_t k = 0; k < s.truth[0].points.size(); ++k) {
    const auto rv = s.series.field(k, 0);
    const bool flat = std::all_of(rv.begin(), rv.end(), [](float v) { return v == 0.0f; });
    CHECK(flat == static_cast<bool>(s.suppressed[0][k]));
    dropped += flat;
  }
  CHECK(dropped > 0);
}

TEST_CASE("scenario validation") {
  auto c = small();
  c.dropout_prob = 1.5;
  CHECK_THROWS_AS(generate(c), Error);
  c = small();
  c.grid.lat0 = 70.0;
  CHECK_THROWS_AS(generate(c), Error);
  c = small();
  c.start = make_time(2001, 8, 1, 3);
  CHECK_THROWS_AS(generate(c), Error);
}

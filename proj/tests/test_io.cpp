#include <fstream>
#include <sstream>

#include "doctest.h"

#include "bytestorm/error.hpp"
#include "bytestorm/io.hpp"
#include "bytestorm/synth.hpp"
#include "helpers.hpp"

using namespace bytestorm;
using namespace bytestorm::io;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

synth::Scenario small_scenario(int steps = 4) {
  synth::ScenarioConfig c;
  c.grid = geo::GridSpec{25.0, 100.0, 0.25, 80, 120};
  c.steps = steps;
  c.n_storms = 2;
  c.noise_std = 0.5;
  return synth::generate(c);
}

}  // namespace

TEST_CASE("fixed-point formatting") {
  CHECK(fixed6(1.5) == "1.500000");
  CHECK(fixed6(-0.0) == "0.000000");
  CHECK(fixed6(-1e-9) == "0.000000");
  CHECK(fixed6(123.4567891) == "123.456789");
}

TEST_CASE("grid round trip") {
  fixture::TempDir dir("grid");
  const auto s = small_scenario();
  write_grid(dir.path() / "g", s.series);
  CHECK(first_line(dir.path() / "g" / kManifestName) == "bytestorm-grid 1");
  const auto manifest = slurp(dir.path() / "g" / kManifestName);
  CHECK(manifest.find("dtype f32le") != std::string::npos);
  CHECK(manifest.find(std::string("layout ") + kGridLayout) != std::string::npos);
  CHECK(fs::file_size(dir.path() / "g" / "t000000.f32") == 2u * 80 * 120 * 4);

  const auto back = read_grid(dir.path() / "g");
  CHECK(back.spec == s.series.spec);
  CHECK(back.vars == s.series.vars);
  REQUIRE(back.frames.size() == s.series.frames.size());
  for (std::size_t i = 0; i < back.frames.size(); ++i) {
    CHECK(back.frames[i].time == s.series.frames[i].time);
    CHECK(back.frames[i].values == s.series.frames[i].values);
  }
  CHECK(read_grid_spec(dir.path() / "g") == s.series.spec);

  write_grid(dir.path() / "h", back);
  CHECK(slurp(dir.path() / "g" / kManifestName) == slurp(dir.path() / "h" / kManifestName));
  CHECK(slurp(dir.path() / "g" / "t000003.f32") == slurp(dir.path() / "h" / "t000003.f32"));
}

TEST_CASE("grid reader rejects damaged input") {
  fixture::TempDir dir("badgrid");
  CHECK_THROWS_AS(read_grid(dir.path() / "missing"), Error);
  write_grid(dir.path() / "g", small_scenario(2).series);
  fs::resize_file(dir.path() / "g" / "t000001.f32", 100);
  try {
    read_grid(dir.path() / "g");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("land mask round trip") {
  fixture::TempDir dir("land");
  track::LandMask m;
  m.spec = geo::GridSpec{35.0, 100.0, 0.25, 40, 40};
  m.land.assign(1600, 0);
  m.land[5] = 1;
  m.land[1599] = 1;
  write_land_mask(dir.path() / "mask", m);
  const auto back = read_land_mask(dir.path() / "mask");
  CHECK(back.spec == m.spec);
  CHECK(back.land == m.land);
}

TEST_CASE("best-track round trip and filtering") {
  std::vector<data::BestTrackPoint> pts;
  pts.push_back(fixture::best_point("A", make_time(2001, 8, 1), geo::GeoPoint::make(15, 140)));
  pts.back().msw = 35.5;
  pts.back().basin = data::Basin::WP;
  pts.push_back(fixture::best_point("A", make_time(2001, 8, 1, 3), geo::GeoPoint::make(15.2, 139.8)));
  pts.push_back(fixture::best_point("A", make_time(2001, 8, 1, 6), geo::GeoPoint::make(15.4, 139.6)));
  pts.push_back(fixture::best_point("B", make_time(2001, 8, 1), geo::GeoPoint::make(12, 200)));
  pts.back().track_type = data::TrackType::Spur;
  pts.push_back(fixture::best_point("C", make_time(2001, 8, 1), geo::GeoPoint::make(12, 210)));
  pts.back().track_type = data::TrackType::Provisional;

  std::ostringstream out;
  write_best_track(out, pts);
  CHECK(out.str().rfind(std::string(kBestTrackHeader) + "\n", 0) == 0);
  std::istringstream in(out.str());
  const auto back = read_best_track(in);
  REQUIRE(back.size() == pts.size());
  CHECK(back[0].msw == 35.5);
  CHECK_FALSE(back[1].msw.has_value());
  CHECK(back[0].basin == data::Basin::WP);
  CHECK(back[3].track_type == data::TrackType::Spur);
  std::ostringstream again;
  write_best_track(again, back);
  CHECK(again.str() == out.str());

  fixture::TempDir dir("bt");
  write_best_track(dir.path() / "bt.csv", pts);
  const auto tracks = read_observed(dir.path() / "bt.csv", geo::GridSpec{});
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].id == "A");
  CHECK(tracks[0].points.size() == 2);
  CHECK(tracks[0].points[0].msw == 35.5);

  std::istringstream bad("storm_id,iso_time\nA,2001-08-01T00:00:00Z\n");
  CHECK_THROWS_AS(read_best_track(bad), Error);
}

TEST_CASE("detections format") {
  Detection d;
  d.time = make_time(2001, 8, 1, 6);
  d.row = 10.25;
  d.col = 20.5;
  d.geo = geo::grid_to_geo(10.25, 20.5, geo::GridSpec{});
  d.score = 0.875;
  std::ostringstream out;
  write_detections(out, std::span(&d, 1));
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == kDetectionsHeader);
  CHECK(row.find("10.250000,20.500000") != std::string::npos);
  CHECK(row.find(",0.875000") != std::string::npos);
  std::istringstream back_in(out.str());
  const auto back = read_detections(back_in, 25.0);
  REQUIRE(back.size() == 1);
  CHECK(back[0].time == d.time);
  CHECK(back[0].bbox_size == 25.0);
  CHECK(back[0].score == 0.875);
}

TEST_CASE("track id ordering") {
  CHECK(track_id_less("2", "10"));
  CHECK_FALSE(track_id_less("10", "2"));
  CHECK(track_id_less("S1", "S2"));
  CHECK(track_id_less("S10", "S2"));
  CHECK_FALSE(track_id_less("3", "3"));
}

TEST_CASE("tracks file round trip") {
  const auto g = geo::GridSpec{};
  std::vector<Track> ts{fixture::line_track("10", make_time(2001, 8, 2), 3, 15, 150, 0.5, -0.5, g),
                        fixture::line_track("2", make_time(2001, 8, 1), 2, 12, 160, 0.5, -0.5, g)};
  std::ostringstream out;
  write_tracks(out, ts);
  const std::string text = out.str();
  CHECK(text.rfind(std::string(kTracksHeader) + "\n", 0) == 0);
  CHECK(text.find("# track=2 points=2 genesis=2001-08-01T00:00:00Z lysis=2001-08-01T06:00:00Z") !=
        std::string::npos);
  CHECK(text.find("# track=2") < text.find("# track=10"));

  std::istringstream in(text);
  const auto back = read_tracks(in, g);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "2");
  CHECK(back[1].points.size() == 3);
  CHECK(back[1].points[1].geo.lat == doctest::Approx(15.5));
  CHECK(back[1].points[1].row == doctest::Approx(geo::geo_to_grid_pos(back[1].points[1].geo, g).row));
  std::ostringstream again;
  write_tracks(again, back);
  CHECK(again.str() == text);

  std::istringstream unordered(std::string(kTracksHeader) +
                               "\n1,2001-08-01T06:00:00Z,10,140,1\n1,2001-08-01T00:00:00Z,10,140,1\n");
  CHECK_THROWS_AS(read_tracks(unordered, g), Error);
}

TEST_CASE("patch dataset round trip") {
  std::mt19937_64 rng(3);
  std::vector<data::PatchSample> samples;
  for (int i = 0; i < 5; ++i) {
    auto s = fixture::random_positive(rng);
    s.patch_row = i;
    s.patch_col = 2 * i;
    if (i % 2) {
      s.label = 0;
      s.center.reset();
      s.kind = data::PatchKind::Random;
    }
    samples.push_back(s);
  }
  fixture::TempDir dir("patches");
  write_patches(dir.path() / "p", samples);
  CHECK(first_line(dir.path() / "p" / "patches.csv") ==
        "index,map_time,patch_row,patch_col,label,center_row,center_col,kind,split");
  const auto back = read_patches(dir.path() / "p");
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].pixels == samples[i].pixels);
    CHECK(back[i].label == samples[i].label);
    CHECK(back[i].center == samples[i].center);
    CHECK(back[i].kind == samples[i].kind);
    CHECK(back[i].patch_row == samples[i].patch_row);
    CHECK(back[i].map_time == samples[i].map_time);
  }
}

TEST_CASE("metrics and report outputs") {
  const auto obs = std::vector<Track>{fixture::line_track("S1", make_time(2001, 8, 1), 12, 15, 150, 0.2, -0.5)};
  const auto m = eval::compute_metrics(obs, {});
  fixture::TempDir dir("metrics");
  write_metrics(dir.path(), m, eval::MetricsConfig{});
  const auto summary = slurp(dir.path() / "summary.txt");
  CHECK(summary.find("pod 0.000000") != std::string::npos);
  CHECK(summary.find("far undefined") != std::string::npos);
  const auto js = slurp(dir.path() / "metrics.json");
  CHECK(js.find("\"far\": null") != std::string::npos);
  write_report_tables(dir.path(), m, eval::MetricsConfig{}, obs, {});
  for (const char* f : {"iav.csv", "duration_hist.csv", "smoothness.csv", "seasonal.csv",
                        "latlon_scatter.csv", "tracks_overlay.csv"}) {
    CHECK(fs::exists(dir.path() / f));
  }
  std::ostringstream mr;
  write_match_report(mr, m.match);
  CHECK(mr.str() == "obs_id,det_id,matched_steps,mean_distance_km\n");
}

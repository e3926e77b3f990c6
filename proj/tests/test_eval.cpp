#include <cmath>
#include <random>

#include "doctest.h"

#include "bytestorm/error.hpp"
#include "bytestorm/eval.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace bytestorm;
using namespace bytestorm::eval;

namespace {

const Timestamp kT0 = make_time(1990, 8, 10);

std::vector<Track> some_tracks() {
  return {fixture::line_track("1", kT0, 12, 12, 140, 0.3, -0.5),
          fixture::line_track("2", kT0 + 3 * kStep, 16, 15, 200, 0.2, -0.6),
          fixture::line_track("3", kT0 + 40 * kStep, 14, 18, 160, 0.4, -0.3)};
}

std::vector<Track> shifted(std::vector<Track> ts, double dlat) {
  for (auto& t : ts) {
    for (auto& p : t.points) p.geo.lat += dlat;
  }
  return ts;
}

MatchReport report(int h, int m, int fa) {
  MatchReport r;
  r.hits = h;
  r.misses = m;
  r.false_alarms = fa;
  return r;
}

std::vector<Track> random_tracks(std::mt19937_64& rng, int n, const std::string& prefix) {
  std::uniform_real_distribution<double> lat(5, 30), lon(110, 250), step(-1.0, 1.0);
  std::uniform_int_distribution<int> len(4, 20), start(0, 20);
  std::vector<Track> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(fixture::line_track(prefix + std::to_string(i), kT0 + start(rng) * kStep,
                                      len(rng), lat(rng), lon(rng), step(rng), step(rng)));
  }
  return out;
}

}  // namespace

TEST_CASE("match examples") {
  const auto obs = some_tracks();
  auto r = match_tracks(obs, obs);
  CHECK(r.hits == 3);
  CHECK(r.misses == 0);
  CHECK(r.false_alarms == 0);
  CHECK(pod(r) == 100.0);
  CHECK(far(r) == 0.0);
  for (const auto& p : r.pairs) CHECK(p.mean_distance_km == 0.0);

  const double shift = 400.0 / (geo::kEarthRadiusKm * M_PI / 180.0);
  r = match_tracks(obs, shifted(obs, -shift));
  CHECK(r.hits == 0);
  CHECK(r.misses == 3);
  CHECK(r.false_alarms == 3);

  // One detected track running through both observed storms.
  const std::vector<Track> two{fixture::line_track("a", kT0, 4, 15, 150, 0, 0),
                               fixture::line_track("b", kT0 + 4 * kStep, 4, 15, 151, 0, 0)};
  const std::vector<Track> one{fixture::line_track("x", kT0, 8, 15, 150.1, 0, 0.05)};
  r = match_tracks(two, one);
  CHECK(r.hits == 2);
  CHECK(r.false_alarms == 0);
  CHECK(r.pairs.size() == 2);
}

TEST_CASE("matching requires equal timestamps") {
  const auto a = fixture::line_track("a", kT0, 5, 15, 150, 0, 0);
  const auto b = fixture::line_track("b", kT0 + 5 * kStep, 5, 15, 150, 0, 0);
  const auto r = match_tracks(std::span(&a, 1), std::span(&b, 1));
  CHECK(r.hits == 0);
  CHECK(r.false_alarms == 1);
}

TEST_CASE("min matched steps") {
  const auto a = fixture::line_track("a", kT0, 6, 15, 150, 0, 0);
  const auto b = fixture::line_track("b", kT0 + 4 * kStep, 6, 15, 150, 0, 0);
  MatchConfig cfg;
  cfg.min_matched_steps = 2;
  CHECK(match_tracks(std::span(&a, 1), std::span(&b, 1), cfg).hits == 1);
  cfg.min_matched_steps = 3;
  CHECK(match_tracks(std::span(&a, 1), std::span(&b, 1), cfg).hits == 0);
}

TEST_CASE("pod and far arithmetic") {
  CHECK(pod(report(10, 5, 0)) == doctest::Approx(66.6667).epsilon(1e-5));
  CHECK(far(report(10, 0, 0)) == 0.0);
  CHECK(far(report(3, 0, 1)) == 25.0);
  CHECK_THROWS_AS(pod(report(0, 0, 2)), Error);
  try {
    far(report(0, 3, 0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedMetric);
  }
}

TEST_CASE("match report invariants on random sets") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto obs = random_tracks(rng, 6, "o");
    const auto det = random_tracks(rng, 7, "d");
    const auto r = match_tracks(obs, det);
    CHECK(r.hits + r.misses == 6);
    CHECK(r.false_alarms <= 7);
    std::vector<Track> obs2 = obs, det2 = det;
    obs2.insert(obs2.end(), obs.begin(), obs.end());
    det2.insert(det2.end(), det.begin(), det.end());
    const auto r2 = match_tracks(obs2, det2);
    if (r.hits + r.misses > 0) CHECK(pod(r2) == doctest::Approx(pod(r)));
    if (r.hits + r.false_alarms > 0) CHECK(far(r2) == doctest::Approx(far(r)));

    MatchReport prev;
    bool first = true;
    for (double radius : {50.0, 100.0, 200.0, 300.0, 500.0, 1000.0}) {
      MatchConfig cfg;
      cfg.radius_km = radius;
      const auto cur = match_tracks(obs, det, cfg);
      if (!first) {
        CHECK(cur.hits >= prev.hits);
        CHECK(cur.false_alarms <= prev.false_alarms);
      }
      prev = cur;
      first = false;
    }
  }
}

TEST_CASE("iav series counts genesis months") {
  CHECK(iav_series({}, 8, 1990, 1992) == std::vector<int>{0, 0, 0});
  std::vector<Track> ts;
  for (int i = 0; i < 3; ++i) ts.push_back(fixture::line_track("a", make_time(1990, 8, 3 + i), 12, 10, 140, 0, 0));
  ts.push_back(fixture::line_track("j", make_time(1991, 7, 31, 18), 12, 10, 140, 0, 0));
  ts.push_back(fixture::line_track("s", make_time(1992, 8, 31, 18), 2, 10, 140, 0, 0));
  CHECK(iav_series(ts, 8, 1990, 1992) == std::vector<int>{3, 0, 1});
  CHECK(iav_series(ts, 7, 1990, 1992) == std::vector<int>{0, 1, 0});
  CHECK_THROWS_AS(iav_series(ts, 8, 1993, 1990), Error);
}

TEST_CASE("detrended pearson") {
  const std::vector<double> a{3, 1, 4, 1, 5, 9, 2, 6, 5, 3};
  CHECK(detrended_pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) b[i] = a[i] + 2.5 * i - 7.0;
  CHECK(std::fabs(detrended_pearson(a, b) - 1.0) < 1e-9);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(20), y(20);
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    const auto rx = detrend(x), ry = detrend(y);
    CHECK(std::fabs(detrended_pearson(x, y) - oracle::pearson(rx, ry)) < 1e-12);
  }

  const std::vector<double> line{1, 2, 3, 4};
  CHECK_THROWS_AS(detrended_pearson(line, a), Error);
  CHECK_THROWS_AS(detrended_pearson(line, line), Error);
  CHECK_THROWS_AS(detrended_pearson(std::vector<double>{1, 2}, std::vector<double>{2, 1}), Error);
}

TEST_CASE("detrend removes a least-squares line") {
  const std::vector<double> s{2, 4, 5, 4, 5};
  const auto r = detrend(s);
  double sum = 0, dot = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sum += r[i];
    dot += r[i] * static_cast<double>(i);
  }
  CHECK(std::fabs(sum) < 1e-12);
  CHECK(std::fabs(dot) < 1e-12);
}

TEST_CASE("duration histogram") {
  const std::vector<Track> ts{fixture::line_track("a", kT0, 12, 10, 140, 0, 0),
                              fixture::line_track("b", kT0, 13, 10, 140, 0, 0),
                              fixture::line_track("c", kT0, 1, 10, 140, 0, 0)};
  const auto h = duration_histogram(ts);
  CHECK(h.at(2) == 1);
  CHECK(h.at(3) == 1);
  CHECK(h.at(0) == 1);
  int total = 0;
  for (auto [bin, n] : h) total += n;
  CHECK(total == 3);
  CHECK(duration_histogram({}).empty());
}

TEST_CASE("smoothness statistics") {
  const std::vector<Track> straight{fixture::line_track("a", kT0, 8, 0, 140, 0, 1),
                                    fixture::line_track("b", kT0, 8, 0, 150, 0, -1)};
  auto s = smoothness_stats(straight);
  REQUIRE(s.sigma.size() == 2);
  CHECK(s.median == doctest::Approx(0.0).epsilon(1e-9));

  Track zig = fixture::line_track("z", kT0, 8, 10, 140, 0.5, 0.5);
  for (std::size_t i = 1; i < zig.points.size(); i += 2) zig.points[i].geo.lat += 0.3;
  s = smoothness_stats(std::span(&zig, 1));
  REQUIRE(s.sigma.size() == 1);
  CHECK(s.q1 == s.sigma[0]);
  CHECK(s.median == s.sigma[0]);
  CHECK(s.q3 == s.sigma[0]);

  const auto tiny = fixture::line_track("t", kT0, 3, 10, 140, 0.5, 0.5);
  s = smoothness_stats(std::span(&tiny, 1));
  CHECK(s.sigma.empty());
  CHECK(s.excluded == 1);
}

TEST_CASE("quantile interpolation") {
  CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
  CHECK(quantile({4, 1, 3, 2}, 0.25) == 1.75);
  CHECK(quantile({7}, 0.75) == 7);
  CHECK_THROWS_AS(quantile({}, 0.5), Error);
}

TEST_CASE("seasonal distribution") {
  CHECK(seasonal_distribution({}) == std::array<int, 12>{});
  std::vector<Track> ts;
  for (int y = 1990; y < 1995; ++y) ts.push_back(fixture::line_track("s", make_time(y, 9, 5), 4, 10, 140, 0, 0));
  const auto m = seasonal_distribution(ts);
  CHECK(m[8] == 5);
  int total = 0;
  for (int v : m) total += v;
  CHECK(total == 5);
}

TEST_CASE("lat lon scatter") {
  auto obs = some_tracks();
  obs[0].points[0].msw = 35.0;
  auto r = match_tracks(obs, obs);
  auto trip = latlon_scatter(r, obs, obs);
  int expected = 0;
  for (const auto& p : r.pairs) expected += p.matched_steps;
  CHECK(static_cast<int>(trip.size()) == expected);
  for (const auto& t : trip) CHECK(t.truth == t.predicted);
  CHECK(trip.front().msw == 35.0);

  const auto biased = shifted(obs, 1.0);
  r = match_tracks(obs, biased);
  trip = latlon_scatter(r, obs, biased);
  REQUIRE_FALSE(trip.empty());
  for (const auto& t : trip) CHECK(t.predicted.lat - t.truth.lat == doctest::Approx(1.0));
}

TEST_CASE("region attribution") {
  auto t = fixture::line_track("a", kT0, 2, 10, 150, 0, 0);
  CHECK(region_of(t) == Region::WNP);
  t = fixture::line_track("b", kT0, 2, 10, 180, 0, 0);
  CHECK(region_of(t) == Region::ENP);
  t = fixture::line_track("c", kT0, 2, 10, 330, 0, 0);
  CHECK(region_of(t) == Region::Other);
  t = fixture::line_track("d", kT0, 2, 10, 150, 0, 0);
  t.basin = data::Basin::EP;
  CHECK(region_of(t) == Region::ENP);
}

TEST_CASE("compute metrics leaves undefined values empty") {
  const auto obs = some_tracks();
  auto m = compute_metrics(obs, {});
  REQUIRE(m.pod.has_value());
  CHECK(*m.pod == 0.0);
  CHECK_FALSE(m.far.has_value());
  CHECK_FALSE(m.iav_pearson_detrended.has_value());

  m = compute_metrics(obs, obs);
  CHECK(*m.pod == 100.0);
  CHECK(*m.far == 0.0);
  CHECK(m.seasonal_observed == m.seasonal_detected);
  CHECK(m.iav_observed.size() == 40);
}

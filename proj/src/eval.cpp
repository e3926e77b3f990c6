#include "bytestorm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bytestorm/error.hpp"

namespace bytestorm::eval {

namespace {

struct PointPairs {
  int count = 0;
  double distance_sum = 0.0;
};

template <typename F>
void for_each_point_pair(const Track& obs, const Track& det, double radius_km, F&& visit) {
  std::size_t j = 0;
  for (const auto& op : obs.points) {
    while (j < det.points.size() && det.points[j].time < op.time) ++j;
    for (std::size_t k = j; k < det.points.size() && det.points[k].time == op.time; ++k) {
      const double dist = geo::haversine_km(op.geo, det.points[k].geo);
      if (dist <= radius_km) visit(op, det.points[k], dist);
    }
  }
}

std::optional<double> safe_pearson(std::span<const int> a, std::span<const int> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  try {
    return detrended_pearson(x, y);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

MatchReport match_tracks(std::span<const Track> observed, std::span<const Track> detected,
                         const MatchConfig& cfg) {
  MatchReport report;
  report.observed_hit.assign(observed.size(), 0);
  report.detected_hit.assign(detected.size(), 0);
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const Track& obs = observed[i];
    if (obs.points.empty()) continue;
    for (std::size_t j = 0; j < detected.size(); ++j) {
      const Track& det = detected[j];
      if (det.points.empty() || det.points.back().time < obs.points.front().time ||
          obs.points.back().time < det.points.front().time) {
        continue;
      }
      PointPairs pp;
      for_each_point_pair(obs, det, cfg.radius_km,
                          [&](const TrackPoint&, const TrackPoint&, double dist) {
                            ++pp.count;
                            pp.distance_sum += dist;
                          });
      if (pp.count >= std::max(1, cfg.min_matched_steps)) {
        report.pairs.push_back(MatchedPair{obs.id, det.id, i, j, pp.count,
                                           pp.distance_sum / pp.count});
        report.observed_hit[i] = 1;
        report.detected_hit[j] = 1;
      }
    }
  }
  for (char h : report.observed_hit) (h ? report.hits : report.misses)++;
  for (char h : report.detected_hit) {
    if (!h) ++report.false_alarms;
  }
  return report;
}

double pod(const MatchReport& r) {
  if (r.hits + r.misses == 0) {
    throw Error(ErrorKind::UndefinedMetric, "POD undefined: no observed tracks");
  }
  return 100.0 * r.hits / (r.hits + r.misses);
}

double far(const MatchReport& r) {
  if (r.hits + r.false_alarms == 0) {
    throw Error(ErrorKind::UndefinedMetric, "FAR undefined: no hits and no false alarms");
  }
  return 100.0 * r.false_alarms / (r.hits + r.false_alarms);
}

std::vector<int> iav_series(std::span<const Track> tracks, unsigned month, int year_from,
                            int year_to) {
  if (year_to < year_from) throw Error(ErrorKind::InvalidArgument, "empty year range");
  std::vector<int> counts(static_cast<std::size_t>(year_to - year_from + 1), 0);
  for (const auto& t : tracks) {
    if (t.points.empty()) continue;
    const Timestamp g = t.genesis().time;
    const int y = year_of(g);
    if (month_of(g) == month && y >= year_from && y <= year_to) {
      ++counts[static_cast<std::size_t>(y - year_from)];
    }
  }
  return counts;
}

std::vector<double> detrend(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "detrending needs at least 2 values");
  const double tbar = (static_cast<double>(n) - 1.0) / 2.0;
  const double ybar = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tbar;
    sty += dt * (series[i] - ybar);
    stt += dt * dt;
  }
  const double slope = sty / stt;
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = series[i] - (ybar + slope * (static_cast<double>(i) - tbar));
  }
  return residual;
}

double detrended_pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, "detrended correlation needs equal series of length >= 3");
  }
  const std::vector<double> ra = detrend(a);
  const std::vector<double> rb = detrend(b);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    saa += ra[i] * ra[i];
    sbb += rb[i] * rb[i];
    sab += ra[i] * rb[i];
  }
  // Residuals of an exact line are rounding noise, not variance.
  auto scale = [](std::span<const double> s) {
    double m = 0.0;
    for (double v : s) m = std::max(m, std::fabs(v));
    return m;
  };
  const double tol_a = 1e-12 * std::max(1.0, scale(a));
  const double tol_b = 1e-12 * std::max(1.0, scale(b));
  if (std::sqrt(saa / ra.size()) <= tol_a || std::sqrt(sbb / rb.size()) <= tol_b) {
    throw Error(ErrorKind::UndefinedMetric, "zero residual variance after detrending");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::map<int, int> duration_histogram(std::span<const Track> tracks) {
  std::map<int, int> hist;
  for (const auto& t : tracks) {
    if (t.points.empty()) continue;
    ++hist[static_cast<int>((t.points.size() - 1) / 4)];
  }
  return hist;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of empty data");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

SmoothnessStats smoothness_stats(std::span<const Track> tracks) {
  SmoothnessStats stats;
  for (const auto& t : tracks) {
    std::vector<geo::GeoPoint> pts;
    pts.reserve(t.points.size());
    for (const auto& p : t.points) pts.push_back(p.geo);
    try {
      stats.sigma.push_back(geo::track_smoothness_deg(pts));
      stats.track_ids.push_back(t.id);
    } catch (const Error&) {
      ++stats.excluded;
    }
  }
  if (!stats.sigma.empty()) {
    stats.q1 = quantile(stats.sigma, 0.25);
    stats.median = quantile(stats.sigma, 0.5);
    stats.q3 = quantile(stats.sigma, 0.75);
  }
  return stats;
}

std::array<int, 12> seasonal_distribution(std::span<const Track> tracks) {
  std::array<int, 12> months{};
  for (const auto& t : tracks) {
    if (!t.points.empty()) ++months[month_of(t.genesis().time) - 1];
  }
  return months;
}

std::vector<LatLonTriplet> latlon_scatter(const MatchReport& report,
                                          std::span<const Track> observed,
                                          std::span<const Track> detected,
                                          const MatchConfig& cfg) {
  std::vector<LatLonTriplet> out;
  for (const auto& pair : report.pairs) {
    const Track& obs = observed[pair.obs_index];
    const Track& det = detected[pair.det_index];
    for_each_point_pair(obs, det, cfg.radius_km,
                        [&](const TrackPoint& o, const TrackPoint& d, double) {
                          out.push_back(LatLonTriplet{o.geo, d.geo, o.msw, obs.id, det.id, o.time});
                        });
  }
  return out;
}

std::string_view to_string(Region r) {
  switch (r) {
    case Region::WNP: return "WNP";
    case Region::ENP: return "ENP";
    case Region::Other: return "other";
  }
  return "other";
}

Region region_of(const Track& t) {
  if (t.basin == data::Basin::WP) return Region::WNP;
  if (t.basin == data::Basin::EP) return Region::ENP;
  if (t.basin != data::Basin::Unknown || t.points.empty()) return Region::Other;
  const double lon = geo::normalize_lon(t.genesis().geo.lon);
  if (lon >= 100.0 && lon < 180.0) return Region::WNP;
  if (lon >= 180.0 && lon < 320.0) return Region::ENP;
  return Region::Other;
}

MetricsReport compute_metrics(std::span<const Track> observed, std::span<const Track> detected,
                              const MetricsConfig& cfg) {
  MetricsReport r;
  r.match = match_tracks(observed, detected, cfg.match);
  if (r.match.hits + r.match.misses > 0) r.pod = pod(r.match);
  if (r.match.hits + r.match.false_alarms > 0) r.far = far(r.match);

  r.iav_observed = iav_series(observed, cfg.iav_month, cfg.year_from, cfg.year_to);
  r.iav_detected = iav_series(detected, cfg.iav_month, cfg.year_from, cfg.year_to);
  r.iav_pearson_detrended = safe_pearson(r.iav_observed, r.iav_detected);

  auto by_region = [](std::span<const Track> tracks, Region region) {
    std::vector<Track> out;
    for (const auto& t : tracks) {
      if (region_of(t) == region) out.push_back(t);
    }
    return out;
  };
  for (Region region : {Region::ENP, Region::WNP}) {
    const auto obs = by_region(observed, region);
    const auto det = by_region(detected, region);
    const auto r_region =
        safe_pearson(iav_series(obs, cfg.iav_month, cfg.year_from, cfg.year_to),
                     iav_series(det, cfg.iav_month, cfg.year_from, cfg.year_to));
    (region == Region::ENP ? r.r_enp : r.r_wnp) = r_region;
  }

  r.duration_hist_observed = duration_histogram(observed);
  r.duration_hist_detected = duration_histogram(detected);
  r.smoothness_observed = smoothness_stats(observed);
  r.smoothness_detected = smoothness_stats(detected);
  r.seasonal_observed = seasonal_distribution(observed);
  r.seasonal_detected = seasonal_distribution(detected);
  r.latlon_pairs = latlon_scatter(r.match, observed, detected, cfg.match);
  return r;
}

}  // namespace bytestorm::eval

#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bytestorm/track_types.hpp"

namespace bytestorm::eval {

struct MatchedPair {
  std::string obs_id;
  std::string det_id;
  std::size_t obs_index = 0;
  std::size_t det_index = 0;
  int matched_steps = 0;
  double mean_distance_km = 0.0;
};

struct MatchReport {
  int hits = 0;
  int misses = 0;
  int false_alarms = 0;
  std::vector<MatchedPair> pairs;
  std::vector<char> observed_hit;  // per observed track
  std::vector<char> detected_hit;  // per detected track
};

struct MatchConfig {
  double radius_km = 300.0;
  int min_matched_steps = 1;
  friend bool operator==(const MatchConfig&, const MatchConfig&) = default;
};

/// Point pairs match at equal timestamps within radius_km; a track pair
/// matches with at least min_matched_steps matching point pairs.
MatchReport match_tracks(std::span<const Track> observed, std::span<const Track> detected,
                         const MatchConfig& cfg = {});

/// 100 H / (H + M). Throws Error(UndefinedMetric) when H + M = 0.
double pod(const MatchReport& r);
/// 100 FA / (H + FA). Throws Error(UndefinedMetric) when H + FA = 0.
double far(const MatchReport& r);

/// Yearly counts of tracks whose genesis falls in `month`, for
/// year_from..year_to inclusive.
std::vector<int> iav_series(std::span<const Track> tracks, unsigned month, int year_from,
                            int year_to);

/// Pearson correlation of least-squares-detrended series.
double detrended_pearson(std::span<const double> a, std::span<const double> b);

/// Residuals of a least-squares line fit against the index 0..n-1.
std::vector<double> detrend(std::span<const double> series);

/// Whole-day duration bins: floor((points - 1) / 4).
std::map<int, int> duration_histogram(std::span<const Track> tracks);

struct SmoothnessStats {
  std::vector<double> sigma;         // per eligible track, input order
  std::vector<std::string> track_ids;
  int excluded = 0;                  // tracks with fewer than 4 distinct points
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

SmoothnessStats smoothness_stats(std::span<const Track> tracks);

/// Linear-interpolated quantile of sorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Genesis counts per calendar month, index 0 = January.
std::array<int, 12> seasonal_distribution(std::span<const Track> tracks);

struct LatLonTriplet {
  geo::GeoPoint truth;
  geo::GeoPoint predicted;
  std::optional<double> msw;
  std::string obs_id;
  std::string det_id;
  Timestamp time;
};

std::vector<LatLonTriplet> latlon_scatter(const MatchReport& report,
                                          std::span<const Track> observed,
                                          std::span<const Track> detected,
                                          const MatchConfig& cfg = {});

enum class Region { WNP, ENP, Other };
std::string_view to_string(Region r);

/// Detected tracks: genesis longitude [100, 180) is WNP and [180, 320) ENP.
/// Observed tracks prefer their basin label.
Region region_of(const Track& t);

struct MetricsConfig {
  MatchConfig match;
  unsigned iav_month = 8;
  int year_from = 1980;
  int year_to = 2019;
  friend bool operator==(const MetricsConfig&, const MetricsConfig&) = default;
};

struct MetricsReport {
  MatchReport match;
  std::optional<double> pod;
  std::optional<double> far;
  std::vector<int> iav_observed;
  std::vector<int> iav_detected;
  std::optional<double> iav_pearson_detrended;
  std::optional<double> r_enp;
  std::optional<double> r_wnp;
  std::map<int, int> duration_hist_observed;
  std::map<int, int> duration_hist_detected;
  SmoothnessStats smoothness_observed;
  SmoothnessStats smoothness_detected;
  std::array<int, 12> seasonal_observed{};
  std::array<int, 12> seasonal_detected{};
  std::vector<LatLonTriplet> latlon_pairs;
};

/// Full metric suite; undefined quantities stay empty instead of throwing.
MetricsReport compute_metrics(std::span<const Track> observed, std::span<const Track> detected,
                              const MetricsConfig& cfg = {});

}  // namespace bytestorm::eval

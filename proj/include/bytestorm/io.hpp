#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bytestorm/data.hpp"
#include "bytestorm/eval.hpp"
#include "bytestorm/tracker.hpp"
#include "bytestorm/tune.hpp"

namespace bytestorm::io {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.txt";
inline constexpr const char* kGridLayout = "time-major, var-major, row-major from NW corner";
inline constexpr const char* kBestTrackHeader =
    "storm_id,iso_time,lat,lon,msw,nature,track_type,basin";
inline constexpr const char* kDetectionsHeader = "iso_time,row,col,lat,lon,score";
inline constexpr const char* kTracksHeader = "track_id,iso_time,lat,lon,score";

/// Fixed-point text with six decimals, the convention for every CSV real.
std::string fixed6(double v);

// Portable grid format: `dir/manifest.txt` plus one f32le blob per timestep.
void write_grid(const fs::path& dir, const data::GridSeries& series);
/// Shape and cadence are checked; the variable list is returned as stored.
data::GridSeries read_grid(const fs::path& dir);
/// Grid geometry from the manifest alone.
geo::GridSpec read_grid_spec(const fs::path& dir);

void write_land_mask(const fs::path& dir, const track::LandMask& mask);
/// Single variable "land"; cells above 0.5 count as land.
track::LandMask read_land_mask(const fs::path& dir);

void write_best_track(std::ostream& out, std::span<const data::BestTrackPoint> points);
std::vector<data::BestTrackPoint> read_best_track(std::istream& in);
void write_best_track(const fs::path& path, std::span<const data::BestTrackPoint> points);
std::vector<data::BestTrackPoint> read_best_track(const fs::path& path);

void write_detections(std::ostream& out, std::span<const Detection> dets);
/// Records keep file order; every detection gets `bbox_size`.
std::vector<Detection> read_detections(std::istream& in, double bbox_size = 21.0);
void write_detections(const fs::path& path, std::span<const Detection> dets);
std::vector<Detection> read_detections(const fs::path& path, double bbox_size = 21.0);

/// Track ids compare numerically when both are all digits, else as text.
bool track_id_less(const std::string& a, const std::string& b);

/// Points sorted by (track_id, iso_time), each track preceded by a
/// "# track=<id> points=<n> genesis=<iso> lysis=<iso>" summary line.
void write_tracks(std::ostream& out, std::span<const Track> tracks);
/// Summary lines are skipped. Grid positions are derived from `spec`.
std::vector<Track> read_tracks(std::istream& in, const geo::GridSpec& spec);
void write_tracks(const fs::path& path, std::span<const Track> tracks);
std::vector<Track> read_tracks(const fs::path& path, const geo::GridSpec& spec);

/// Reference tracks from either a best-track CSV or a tracks file, chosen by
/// the header line. Best-track input is filtered to main synoptic points.
std::vector<Track> read_observed(const fs::path& path, const geo::GridSpec& spec);

// Patch dataset: `dir/patches.csv` (metadata) plus `dir/patches.f32` (pixels).
void write_patches(const fs::path& dir, std::span<const data::PatchSample> samples);
std::vector<data::PatchSample> read_patches(const fs::path& dir);

void write_match_report(std::ostream& out, const eval::MatchReport& r);

/// summary.txt and metrics.json.
void write_metrics(const fs::path& dir, const eval::MetricsReport& r,
                   const eval::MetricsConfig& cfg);
std::string metrics_json(const eval::MetricsReport& r, const eval::MetricsConfig& cfg);

/// Plotting tables: iav.csv, duration_hist.csv, smoothness.csv, seasonal.csv,
/// latlon_scatter.csv, plus tracks_overlay.csv with both track sets.
void write_report_tables(const fs::path& dir, const eval::MetricsReport& r,
                         const eval::MetricsConfig& cfg, std::span<const Track> observed,
                         std::span<const Track> detected);

/// Ranked candidate table (selected first, then frontier, then the rest) and
/// a key-value selection summary.
void write_tune_report(const fs::path& dir, const tune::TuneResult& result);

}  // namespace bytestorm::io

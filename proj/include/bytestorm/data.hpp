#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bytestorm/geo.hpp"
#include "bytestorm/time.hpp"

namespace bytestorm::data {

inline constexpr int kPatchSize = 40;
inline constexpr int kChannels = 2;
inline constexpr std::size_t kPatchPixels =
    static_cast<std::size_t>(kChannels) * kPatchSize * kPatchSize;

inline const std::array<std::string, 2> kClimateVars{"rv850", "mslp"};

/// One timestep: values laid out var-major, then row-major from the NW corner.
struct Frame {
  Timestamp time;
  std::vector<float> values;
};

/// Time-ordered stack of gridded fields sharing one GridSpec.
struct GridSeries {
  geo::GridSpec spec;
  std::vector<std::string> vars;
  std::vector<Frame> frames;

  std::size_t cells() const {
    return static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols);
  }
  std::span<const float> field(std::size_t frame, std::size_t var) const {
    return std::span<const float>(frames[frame].values).subspan(var * cells(), cells());
  }

  /// Shape and cadence checks for any variable list.
  void validate_layout() const;
  /// validate_layout() plus the exact (rv850, mslp) variable list.
  void validate() const;
};

enum class Nature { NR, MX, DS, TS, ET, SS };
enum class TrackType { Main, Provisional, Spur, ProvisionalSpur };
enum class Basin { Unknown, EP, WP, NA, NI, SI, SP, SA, MM };

Nature parse_nature(std::string_view s);
TrackType parse_track_type(std::string_view s);
Basin parse_basin(std::string_view s);
std::string_view to_string(Nature n);
std::string_view to_string(TrackType t);
std::string_view to_string(Basin b);

struct BestTrackPoint {
  std::string storm_id;
  Timestamp time;
  geo::GeoPoint center;
  std::optional<double> msw;
  Nature nature = Nature::NR;
  TrackType track_type = TrackType::Main;
  Basin basin = Basin::Unknown;
};

/// Keeps main tracks at synoptic hours whose centers fall inside the grid.
std::vector<BestTrackPoint> filter_best_track(std::span<const BestTrackPoint> points,
                                              const geo::GridSpec& spec);

enum class PatchKind { Cyclone, Nearest, Random };
std::string_view to_string(PatchKind k);
PatchKind parse_patch_kind(std::string_view s);

struct PatchSample {
  Timestamp map_time;
  int patch_row = 0;
  int patch_col = 0;
  std::vector<float> pixels;  // kChannels x 40 x 40
  int label = 0;
  std::optional<geo::Cell> center;
  PatchKind kind = PatchKind::Random;

  float at(int channel, int r, int c) const {
    return pixels[static_cast<std::size_t>((channel * kPatchSize + r) * kPatchSize + c)];
  }
};

/// Splits one map into non-overlapping 40x40 tiles, row-major over tiles.
/// `values` holds kChannels x rows x cols.
std::vector<PatchSample> patchify(std::span<const float> values, int rows, int cols,
                                  Timestamp time = {});

/// Inverse of patchify.
std::vector<float> reassemble(std::span<const PatchSample> patches, int rows, int cols);

struct LabelResult {
  std::vector<PatchSample> patches;
  int skipped = 0;     // centers outside the grid
  int collisions = 0;  // extra centers landing in an already positive tile
};

/// Marks tiles holding a best-track center. Centers snap to the nearest cell.
LabelResult label_patches(std::vector<PatchSample> patches,
                          std::span<const BestTrackPoint> points,
                          const geo::GridSpec& spec);

/// Cyclone tiles, three nearest neighbours and one random negative per
/// cyclone tile. Each element of `maps` is one labelled patchify() output.
std::vector<PatchSample> select_training_patches(
    std::span<const std::vector<PatchSample>> maps, std::uint64_t seed);

enum class Augmentation { Rotate180, FlipHorizontal, FlipVertical };

PatchSample apply_augmentation(const PatchSample& sample, Augmentation how);

/// Rotated, h-flipped and v-flipped copies of a positive sample.
std::array<PatchSample, 3> augment(const PatchSample& sample);

struct DatasetSplit {
  std::vector<PatchSample> train;
  std::vector<PatchSample> val;
  std::vector<PatchSample> test_august;
  std::vector<PatchSample> test_recent;
  std::size_t outside = 0;  // samples outside 1980-2023
};

enum class SplitName { Train, Val, TestAugust, TestRecent, Outside };
SplitName split_of(Timestamp t);
std::string_view to_string(SplitName s);

DatasetSplit split_dataset(std::vector<PatchSample> samples);

/// Per-channel standardization parameters.
struct NormStats {
  std::array<double, kChannels> mean{0.0, 0.0};
  std::array<double, kChannels> stddev{1.0, 1.0};
};

NormStats compute_norm_stats(std::span<const PatchSample> samples);

}  // namespace bytestorm::data

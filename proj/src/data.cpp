#include "bytestorm/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "bytestorm/error.hpp"

namespace bytestorm::data {

namespace {

std::string normalized_token(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == '-') ch = '_';
    if (!std::isspace(static_cast<unsigned char>(ch))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  return out;
}

constexpr int kHalf = kPatchSize - 1;  // 39

}  // namespace

void GridSeries::validate_layout() const {
  spec.validate();
  if (vars.empty()) throw Error(ErrorKind::InvalidArgument, "grid series has no variables");
  const std::size_t expected = vars.size() * cells();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].values.size() != expected) {
      throw Error(ErrorKind::DimensionMismatch,
                  "frame " + format_iso(frames[i].time) + " has " +
                      std::to_string(frames[i].values.size()) + " values, expected " +
                      std::to_string(expected));
    }
    if (!is_synoptic(frames[i].time)) {
      throw Error(ErrorKind::InvalidArgument,
                  "frame " + format_iso(frames[i].time) + " is not at 00/06/12/18 UTC");
    }
    if (i > 0 && !(frames[i - 1].time < frames[i].time)) {
      throw Error(ErrorKind::InvalidArgument, "frame timestamps must be strictly increasing");
    }
  }
}

void GridSeries::validate() const {
  validate_layout();
  if (vars.size() != kClimateVars.size() ||
      !std::equal(vars.begin(), vars.end(), kClimateVars.begin())) {
    throw Error(ErrorKind::InvalidArgument, "grid series variables must be (rv850, mslp)");
  }
}

Nature parse_nature(std::string_view s) {
  const std::string t = normalized_token(s);
  if (t == "nr") return Nature::NR;
  if (t == "mx") return Nature::MX;
  if (t == "ds") return Nature::DS;
  if (t == "ts") return Nature::TS;
  if (t == "et") return Nature::ET;
  if (t == "ss") return Nature::SS;
  throw Error(ErrorKind::InvalidArgument, "unknown storm nature '" + std::string(s) + "'");
}

TrackType parse_track_type(std::string_view s) {
  const std::string t = normalized_token(s);
  if (t == "main") return TrackType::Main;
  if (t == "provisional") return TrackType::Provisional;
  if (t == "spur") return TrackType::Spur;
  if (t == "provisional_spur") return TrackType::ProvisionalSpur;
  throw Error(ErrorKind::InvalidArgument, "unknown track type '" + std::string(s) + "'");
}

Basin parse_basin(std::string_view s) {
  const std::string t = normalized_token(s);
  if (t.empty()) return Basin::Unknown;
  if (t == "ep" || t == "enp") return Basin::EP;
  if (t == "wp" || t == "wnp") return Basin::WP;
  if (t == "na" || t == "natl") return Basin::NA;
  if (t == "ni") return Basin::NI;
  if (t == "si") return Basin::SI;
  if (t == "sp") return Basin::SP;
  if (t == "sa") return Basin::SA;
  if (t == "mm") return Basin::MM;
  throw Error(ErrorKind::InvalidArgument, "unknown basin '" + std::string(s) + "'");
}

std::string_view to_string(Nature n) {
  static constexpr std::array<std::string_view, 6> names{"NR", "MX", "DS", "TS", "ET", "SS"};
  return names[static_cast<std::size_t>(n)];
}

std::string_view to_string(TrackType t) {
  static constexpr std::array<std::string_view, 4> names{"main", "provisional", "spur",
                                                         "provisional_spur"};
  return names[static_cast<std::size_t>(t)];
}

std::string_view to_string(Basin b) {
  static constexpr std::array<std::string_view, 9> names{"", "EP", "WP", "NA", "NI",
                                                         "SI", "SP", "SA", "MM"};
  return names[static_cast<std::size_t>(b)];
}

std::string_view to_string(PatchKind k) {
  switch (k) {
    case PatchKind::Cyclone: return "cyclone";
    case PatchKind::Nearest: return "nearest";
    case PatchKind::Random: return "random";
  }
  return "random";
}

PatchKind parse_patch_kind(std::string_view s) {
  if (s == "cyclone") return PatchKind::Cyclone;
  if (s == "nearest") return PatchKind::Nearest;
  if (s == "random") return PatchKind::Random;
  throw Error(ErrorKind::InvalidArgument, "unknown patch kind '" + std::string(s) + "'");
}

std::vector<BestTrackPoint> filter_best_track(std::span<const BestTrackPoint> points,
                                              const geo::GridSpec& spec) {
  std::vector<BestTrackPoint> kept;
  for (const auto& p : points) {
    if (p.track_type != TrackType::Main || !is_synoptic(p.time)) continue;
    const geo::GridPos pos = geo::geo_to_grid_pos(p.center, spec);
    const double r = std::floor(pos.row + 0.5);
    const double c = std::floor(pos.col + 0.5);
    if (r < 0 || c < 0 || r >= spec.rows || c >= spec.cols) continue;
    kept.push_back(p);
  }
  return kept;
}

std::vector<PatchSample> patchify(std::span<const float> values, int rows, int cols,
                                  Timestamp time) {
  if (rows <= 0 || cols <= 0 || rows % kPatchSize != 0 || cols % kPatchSize != 0) {
    throw Error(ErrorKind::DimensionMismatch,
                "map " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " is not divisible into 40x40 tiles");
  }
  const std::size_t plane = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (values.size() != kChannels * plane) {
    throw Error(ErrorKind::DimensionMismatch, "map value count does not match its shape");
  }
  const int tile_rows = rows / kPatchSize;
  const int tile_cols = cols / kPatchSize;
  std::vector<PatchSample> out;
  out.reserve(static_cast<std::size_t>(tile_rows * tile_cols));
  for (int i = 0; i < tile_rows; ++i) {
    for (int j = 0; j < tile_cols; ++j) {
      PatchSample p;
      p.map_time = time;
      p.patch_row = i;
      p.patch_col = j;
      p.pixels.resize(kPatchPixels);
      for (int ch = 0; ch < kChannels; ++ch) {
        for (int r = 0; r < kPatchSize; ++r) {
          const float* src = values.data() + ch * plane +
                             static_cast<std::size_t>(i * kPatchSize + r) * cols +
                             static_cast<std::size_t>(j * kPatchSize);
          std::copy(src, src + kPatchSize,
                    p.pixels.begin() + (ch * kPatchSize + r) * kPatchSize);
        }
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<float> reassemble(std::span<const PatchSample> patches, int rows, int cols) {
  const std::size_t plane = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  std::vector<float> values(kChannels * plane, 0.0f);
  for (const auto& p : patches) {
    if (p.pixels.size() != kPatchPixels || (p.patch_row + 1) * kPatchSize > rows ||
        (p.patch_col + 1) * kPatchSize > cols) {
      throw Error(ErrorKind::DimensionMismatch, "patch does not fit the target map");
    }
    for (int ch = 0; ch < kChannels; ++ch) {
      for (int r = 0; r < kPatchSize; ++r) {
        auto src = p.pixels.begin() + (ch * kPatchSize + r) * kPatchSize;
        float* dst = values.data() + ch * plane +
                     static_cast<std::size_t>(p.patch_row * kPatchSize + r) * cols +
                     static_cast<std::size_t>(p.patch_col * kPatchSize);
        std::copy(src, src + kPatchSize, dst);
      }
    }
  }
  return values;
}

LabelResult label_patches(std::vector<PatchSample> patches,
                          std::span<const BestTrackPoint> points,
                          const geo::GridSpec& spec) {
  LabelResult result;
  const int tile_cols = spec.cols / kPatchSize;
  for (const auto& pt : points) {
    geo::Cell cell;
    try {
      cell = geo::geo_to_grid(pt.center, spec);
    } catch (const Error&) {
      ++result.skipped;
      continue;
    }
    const int pr = cell.row / kPatchSize;
    const int pc = cell.col / kPatchSize;
    const auto idx = static_cast<std::size_t>(pr * tile_cols + pc);
    if (idx >= patches.size()) {
      ++result.skipped;
      continue;
    }
    PatchSample& p = patches[idx];
    if (p.label == 1) {
      ++result.collisions;
      continue;
    }
    p.label = 1;
    p.kind = PatchKind::Cyclone;
    p.center = geo::Cell{cell.row - pr * kPatchSize, cell.col - pc * kPatchSize};
  }
  result.patches = std::move(patches);
  return result;
}

std::vector<PatchSample> select_training_patches(
    std::span<const std::vector<PatchSample>> maps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PatchSample> dataset;
  for (const auto& map : maps) {
    std::set<std::pair<int, int>> used;
    std::vector<const PatchSample*> cyclones;
    for (const auto& p : map) {
      if (p.label == 1) {
        cyclones.push_back(&p);
        used.emplace(p.patch_row, p.patch_col);
      }
    }
    auto find_tile = [&](int r, int c) -> const PatchSample* {
      for (const auto& p : map) {
        if (p.patch_row == r && p.patch_col == c) return &p;
      }
      return nullptr;
    };

    for (const PatchSample* cyc : cyclones) {
      dataset.push_back(*cyc);
      const double cy = cyc->patch_row * kPatchSize + cyc->center->row;
      const double cx = cyc->patch_col * kPatchSize + cyc->center->col;
      // (ring, distance, non-diagonal, row, col): 8-neighbourhood first, then
      // outer rings back-fill when neighbours are unavailable.
      using Key = std::tuple<int, double, int, int, int>;
      std::vector<std::pair<Key, const PatchSample*>> ranked;
      for (const auto& p : map) {
        if (used.contains({p.patch_row, p.patch_col})) continue;
        const int dr = p.patch_row - cyc->patch_row;
        const int dc = p.patch_col - cyc->patch_col;
        const int ring = std::max(std::abs(dr), std::abs(dc));
        const double ty = p.patch_row * kPatchSize + 0.5 * kHalf;
        const double tx = p.patch_col * kPatchSize + 0.5 * kHalf;
        const double dist = std::hypot(ty - cy, tx - cx);
        const int non_diagonal = (dr != 0 && dc != 0) ? 0 : 1;
        ranked.push_back({Key{ring, dist, non_diagonal, p.patch_row, p.patch_col}, &p});
      }
      std::sort(ranked.begin(), ranked.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < ranked.size() && k < 3; ++k) {
        PatchSample neg = *ranked[k].second;
        neg.kind = PatchKind::Nearest;
        used.emplace(neg.patch_row, neg.patch_col);
        dataset.push_back(std::move(neg));
      }
    }
    for (std::size_t k = 0; k < cyclones.size(); ++k) {
      std::vector<std::pair<int, int>> pool;
      for (const auto& p : map) {
        if (!used.contains({p.patch_row, p.patch_col})) pool.emplace_back(p.patch_row, p.patch_col);
      }
      if (pool.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const auto [r, c] = pool[pick(rng)];
      PatchSample neg = *find_tile(r, c);
      neg.kind = PatchKind::Random;
      used.emplace(r, c);
      dataset.push_back(std::move(neg));
    }
  }
  return dataset;
}

PatchSample apply_augmentation(const PatchSample& sample, Augmentation how) {
  PatchSample out = sample;
  auto map_rc = [how](int r, int c) -> std::pair<int, int> {
    switch (how) {
      case Augmentation::Rotate180: return {kHalf - r, kHalf - c};
      case Augmentation::FlipHorizontal: return {r, kHalf - c};
      case Augmentation::FlipVertical: return {kHalf - r, c};
    }
    return {r, c};
  };
  for (int ch = 0; ch < kChannels; ++ch) {
    for (int r = 0; r < kPatchSize; ++r) {
      for (int c = 0; c < kPatchSize; ++c) {
        const auto [sr, sc] = map_rc(r, c);
        out.pixels[static_cast<std::size_t>((ch * kPatchSize + r) * kPatchSize + c)] =
            sample.at(ch, sr, sc);
      }
    }
  }
  if (sample.center) {
    const auto [r, c] = map_rc(sample.center->row, sample.center->col);
    out.center = geo::Cell{r, c};
  }
  return out;
}

std::array<PatchSample, 3> augment(const PatchSample& sample) {
  if (sample.label != 1 || !sample.center) {
    throw Error(ErrorKind::InvalidArgument, "augmentation applies to positive samples only");
  }
  return {apply_augmentation(sample, Augmentation::Rotate180),
          apply_augmentation(sample, Augmentation::FlipHorizontal),
          apply_augmentation(sample, Augmentation::FlipVertical)};
}

SplitName split_of(Timestamp t) {
  const int y = year_of(t);
  if (y < 1980 || y > 2023) return SplitName::Outside;
  if (y >= 2020) return SplitName::TestRecent;
  if (month_of(t) == 8) return SplitName::TestAugust;
  return y >= 2010 ? SplitName::Val : SplitName::Train;
}

std::string_view to_string(SplitName s) {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Val: return "val";
    case SplitName::TestAugust: return "test_august";
    case SplitName::TestRecent: return "test_recent";
    case SplitName::Outside: return "outside";
  }
  return "outside";
}

DatasetSplit split_dataset(std::vector<PatchSample> samples) {
  DatasetSplit out;
  for (auto& s : samples) {
    switch (split_of(s.map_time)) {
      case SplitName::Train: out.train.push_back(std::move(s)); break;
      case SplitName::Val: out.val.push_back(std::move(s)); break;
      case SplitName::TestAugust: out.test_august.push_back(std::move(s)); break;
      case SplitName::TestRecent: out.test_recent.push_back(std::move(s)); break;
      case SplitName::Outside: ++out.outside; break;
    }
  }
  return out;
}

NormStats compute_norm_stats(std::span<const PatchSample> samples) {
  NormStats stats;
  constexpr std::size_t plane = static_cast<std::size_t>(kPatchSize) * kPatchSize;
  for (int ch = 0; ch < kChannels; ++ch) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = s.pixels[ch * plane + i];
        sum += v;
        sumsq += v * v;
      }
      n += plane;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
    stats.mean[ch] = mean;
    stats.stddev[ch] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return stats;
}

}  // namespace bytestorm::data

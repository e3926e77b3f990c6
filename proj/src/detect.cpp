#include "bytestorm/detect.hpp"

#include <algorithm>
#include <cmath>

#include "bytestorm/error.hpp"

namespace bytestorm::detect {

void DetectorParams::validate() const {
  if (!(class_threshold > 0.0 && class_threshold < 1.0)) {
    throw Error(ErrorKind::Config, "class_threshold must lie in (0, 1)");
  }
  const int side = static_cast<int>(bbox_size);
  if (side != bbox_size || side <= 0 || side % 2 == 0) {
    throw Error(ErrorKind::Config, "bbox_size must be a positive odd integer");
  }
  if (dedupe_radius_cells < 0) throw Error(ErrorKind::Config, "dedupe radius must be >= 0");
}

std::vector<Detection> dedupe(std::vector<Detection> dets, double radius_cells) {
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return std::max(std::fabs(k.row - d.row), std::fabs(k.col - d.col)) <= radius_cells;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::pair<double, double> local_to_global(int patch_row, int patch_col, double local_row,
                                          double local_col) {
  const double hi = data::kPatchSize - 1;
  return {patch_row * data::kPatchSize + std::clamp(local_row, 0.0, hi),
          patch_col * data::kPatchSize + std::clamp(local_col, 0.0, hi)};
}

std::vector<Detection> detect_neural_frame(const data::GridSeries& series, std::size_t frame,
                                           const nn::Network<float>& classifier,
                                           const nn::Network<float>& localizer,
                                           const DetectorParams& p, std::size_t* raw_count) {
  if (classifier.config().head != nn::Head::Classification ||
      localizer.config().head != nn::Head::Localization) {
    throw Error(ErrorKind::InvalidArgument, "detector needs a classifier and a localizer");
  }
  const auto& f = series.frames[frame];
  const auto patches = data::patchify(f.values, series.spec.rows, series.spec.cols, f.time);
  std::vector<const data::PatchSample*> all;
  all.reserve(patches.size());
  for (const auto& patch : patches) all.push_back(&patch);
  const std::vector<double> scores = nn::predict(classifier, all);

  std::vector<const data::PatchSample*> positive;
  std::vector<double> positive_scores;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (scores[i] >= p.class_threshold) {
      positive.push_back(all[i]);
      positive_scores.push_back(scores[i]);
    }
  }
  std::vector<Detection> dets;
  if (!positive.empty()) {
    const std::vector<double> centers = nn::predict(localizer, positive);
    for (std::size_t i = 0; i < positive.size(); ++i) {
      const auto [row, col] = local_to_global(positive[i]->patch_row, positive[i]->patch_col,
                                              centers[2 * i], centers[2 * i + 1]);
      Detection d;
      d.time = f.time;
      d.row = row;
      d.col = col;
      d.geo = geo::grid_to_geo(row, col, series.spec);
      d.score = std::clamp(positive_scores[i], 0.0, 1.0);
      d.bbox_size = p.bbox_size;
      dets.push_back(d);
    }
  }
  if (raw_count) *raw_count = dets.size();
  return dedupe(std::move(dets), p.dedupe_radius_cells);
}

std::vector<Detection> detect_neural(const data::GridSeries& series,
                                     const nn::Network<float>& classifier,
                                     const nn::Network<float>& localizer,
                                     const DetectorParams& p) {
  series.validate();
  p.validate();
  std::vector<Detection> out;
  for (std::size_t i = 0; i < series.frames.size(); ++i) {
    auto frame = detect_neural_frame(series, i, classifier, localizer, p);
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

std::vector<Detection> detect_physics_frame(const data::GridSeries& series, std::size_t frame,
                                            const DetectorParams& p,
                                            const PhysicsParams& phys) {
  const int rows = series.spec.rows, cols = series.spec.cols;
  const auto rv = series.field(frame, 0);
  const auto mslp = series.field(frame, 1);
  auto at = [cols](std::span<const float> f, int r, int c) {
    return f[static_cast<std::size_t>(r) * cols + c];
  };
  const auto [lo_it, hi_it] = std::minmax_element(mslp.begin(), mslp.end());
  const double range = static_cast<double>(*hi_it) - static_cast<double>(*lo_it);
  std::vector<Detection> dets;
  if (!(range > 0.0)) return dets;

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const float center = at(mslp, r, c);
      bool strict_min = true;
      for (int dr = -phys.min_radius; dr <= phys.min_radius && strict_min; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -phys.min_radius; dc <= phys.min_radius; ++dc) {
          const int cc = c + dc;
          if ((dr == 0 && dc == 0) || cc < 0 || cc >= cols) continue;
          if (!(at(mslp, rr, cc) > center)) {
            strict_min = false;
            break;
          }
        }
      }
      if (!strict_min) continue;

      // Strongest vorticity nearby must be positive and a local maximum.
      int best_r = -1, best_c = -1;
      float best = 0.0f;
      for (int dr = -phys.vorticity_radius; dr <= phys.vorticity_radius; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -phys.vorticity_radius; dc <= phys.vorticity_radius; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= cols) continue;
          if (best_r < 0 || at(rv, rr, cc) > best) {
            best = at(rv, rr, cc);
            best_r = rr;
            best_c = cc;
          }
        }
      }
      if (!(best > 0.0f)) continue;
      bool local_max = true;
      for (int dr = -1; dr <= 1 && local_max; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = best_r + dr, cc = best_c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          if (at(rv, rr, cc) > best) {
            local_max = false;
            break;
          }
        }
      }
      if (!local_max) continue;

      float window_max = center;
      for (int dr = -phys.depth_radius; dr <= phys.depth_radius; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= rows) continue;
        for (int dc = -phys.depth_radius; dc <= phys.depth_radius; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= cols) continue;
          window_max = std::max(window_max, at(mslp, rr, cc));
        }
      }
      Detection d;
      d.time = series.frames[frame].time;
      d.row = r;
      d.col = c;
      d.geo = geo::grid_to_geo(r, c, series.spec);
      d.score = std::clamp((static_cast<double>(window_max) - center) / range, 0.0, 1.0);
      d.bbox_size = p.bbox_size;
      dets.push_back(d);
    }
  }
  return dedupe(std::move(dets), p.dedupe_radius_cells);
}

std::vector<Detection> detect_physics_baseline(const data::GridSeries& series,
                                               const DetectorParams& p,
                                               const PhysicsParams& phys) {
  series.validate();
  p.validate();
  std::vector<Detection> out;
  for (std::size_t i = 0; i < series.frames.size(); ++i) {
    auto frame = detect_physics_frame(series, i, p, phys);
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

}  // namespace bytestorm::detect

#pragma once

#include <span>
#include <vector>

#include "bytestorm/data.hpp"
#include "bytestorm/nn.hpp"
#include "bytestorm/track_types.hpp"

namespace bytestorm::detect {

struct DetectorParams {
  double class_threshold = 0.5;
  double bbox_size = 21.0;
  int dedupe_radius_cells = 8;

  void validate() const;
  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

/// Greedy suppression: highest score first, ties by (row, col); a detection
/// survives when no kept one lies within `radius_cells` (Chebyshev).
std::vector<Detection> dedupe(std::vector<Detection> dets, double radius_cells);

/// Patch-local center to global grid coordinates. Local values are clamped
/// to [0, 39] first.
std::pair<double, double> local_to_global(int patch_row, int patch_col, double local_row,
                                          double local_col);

/// Classify every tile, localize tiles scoring at least class_threshold, then
/// dedupe. Output is grouped by timestamp in series order.
std::vector<Detection> detect_neural(const data::GridSeries& series,
                                     const nn::Network<float>& classifier,
                                     const nn::Network<float>& localizer,
                                     const DetectorParams& p);

/// Same pipeline on one frame; detections before dedupe are also returned
/// through `raw_count` when non-null.
std::vector<Detection> detect_neural_frame(const data::GridSeries& series, std::size_t frame,
                                           const nn::Network<float>& classifier,
                                           const nn::Network<float>& localizer,
                                           const DetectorParams& p,
                                           std::size_t* raw_count = nullptr);

struct PhysicsParams {
  int min_radius = 3;        // strict MSLP minimum over a 7x7 window
  int vorticity_radius = 4;  // positive RV850 maximum within 4 cells
  int depth_radius = 10;     // window for the pressure depth
};

/// MSLP strict local minima paired with a positive RV850 local maximum.
/// Score = (window max - center) / (field max - field min), in [0, 1].
std::vector<Detection> detect_physics_frame(const data::GridSeries& series, std::size_t frame,
                                            const DetectorParams& p,
                                            const PhysicsParams& phys = {});

std::vector<Detection> detect_physics_baseline(const data::GridSeries& series,
                                               const DetectorParams& p,
                                               const PhysicsParams& phys = {});

}  // namespace bytestorm::detect

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bytestorm/eval.hpp"
#include "bytestorm/tracker.hpp"

namespace bytestorm::tune {

enum class ConstraintSet { None, NoLand, Lat30, Lat50, NoLandLat30, NoLandLat50 };

std::string_view to_string(ConstraintSet c);
ConstraintSet parse_constraint_set(std::string_view s);
bool needs_land_mask(ConstraintSet c);
/// Applies the constraint's genesis rules on top of `base`.
track::ByteParams with_constraint(track::ByteParams base, ConstraintSet c);

struct Objectives {
  double pod = 0.0;
  double far = 0.0;
  double r_enp = 0.0;
  double r_wnp = 0.0;
};

struct TunerCandidate {
  double bbox_size = 21.0;
  int track_buffer = 1;
  double match_threshold = 0.8;
  double track_threshold = 0.7;
  ConstraintSet constraint_set = ConstraintSet::None;
  Objectives metrics;
  bool r_enp_defined = true;
  bool r_wnp_defined = true;

  track::ByteParams params(const track::ByteParams& base) const;
};

struct Weights {
  double w_pod = 0.4;
  double w_far = 0.3;
  double w_enp = 0.15;
  double w_wnp = 0.15;

  void validate() const;
  friend bool operator==(const Weights&, const Weights&) = default;
};

struct GridConfig {
  std::vector<double> bbox_sizes{15, 21, 25, 31, 35};
  std::vector<int> track_buffers{1, 2, 3, 4};
  std::vector<ConstraintSet> constraint_sets{ConstraintSet::None,  ConstraintSet::NoLand,
                                             ConstraintSet::Lat30, ConstraintSet::Lat50,
                                             ConstraintSet::NoLandLat30,
                                             ConstraintSet::NoLandLat50};
  double match_threshold = 0.8;
  double track_threshold = 0.7;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// Cartesian product bbox x buffer x constraint (de-duplicated, ascending
/// bbox and buffer, constraint order as the enum).
std::vector<TunerCandidate> enumerate_candidates(const GridConfig& grid);

/// x dominates y when x is no worse on every oriented objective (pod, r_enp,
/// r_wnp up; far down) and strictly better on one.
bool dominates(const Objectives& x, const Objectives& y);

/// Indices of non-dominated candidates, in input order.
std::vector<std::size_t> pareto_frontier(std::span<const TunerCandidate> candidates);

/// Index (into `candidates`) of the best frontier member under min-max
/// normalized weighted scoring. Ties: lower FAR, then smaller bbox.
std::size_t weighted_select(std::span<const TunerCandidate> candidates,
                            std::span<const std::size_t> frontier, const Weights& w);

struct EvaluationInputs {
  std::span<const Detection> detections;
  std::span<const Track> observed;
  const track::LandMask* land = nullptr;
  track::ByteParams base;
  eval::MetricsConfig metrics;
};

/// Tracks, filters and scores one candidate. Undefined correlations count
/// as 0 and are flagged on the candidate.
TunerCandidate evaluate_candidate(TunerCandidate candidate, const EvaluationInputs& in);

/// Evaluates every candidate with up to `jobs` threads; order is preserved.
std::vector<TunerCandidate> evaluate_all(std::vector<TunerCandidate> candidates,
                                         const EvaluationInputs& in, int jobs = 1);

/// First-phase sweep over (match, track) threshold pairs at fixed bbox and
/// buffer.
std::vector<TunerCandidate> threshold_sweep(std::span<const double> match_thresholds,
                                            std::span<const double> track_thresholds,
                                            double bbox_size, int track_buffer,
                                            const EvaluationInputs& in, int jobs = 1);

struct TuneResult {
  std::vector<TunerCandidate> candidates;
  std::vector<std::size_t> frontier;
  std::size_t selected = 0;
  std::vector<std::string> warnings;
};

/// enumerate -> evaluate -> frontier -> select. Land constraint sets are
/// skipped with a warning when no mask is supplied.
TuneResult run_tuner(const GridConfig& grid, const EvaluationInputs& in, const Weights& w,
                     int jobs = 1);

}  // namespace bytestorm::tune

#include "bytestorm/tune.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <limits>
#include <set>
#include <thread>

#include "bytestorm/error.hpp"

namespace bytestorm::tune {

std::string_view to_string(ConstraintSet c) {
  switch (c) {
    case ConstraintSet::None: return "none";
    case ConstraintSet::NoLand: return "no-land";
    case ConstraintSet::Lat30: return "lat30";
    case ConstraintSet::Lat50: return "lat50";
    case ConstraintSet::NoLandLat30: return "no-land+lat30";
    case ConstraintSet::NoLandLat50: return "no-land+lat50";
  }
  return "none";
}

ConstraintSet parse_constraint_set(std::string_view s) {
  for (ConstraintSet c : {ConstraintSet::None, ConstraintSet::NoLand, ConstraintSet::Lat30,
                          ConstraintSet::Lat50, ConstraintSet::NoLandLat30,
                          ConstraintSet::NoLandLat50}) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorKind::Config, "unknown constraint set '" + std::string(s) + "'");
}

bool needs_land_mask(ConstraintSet c) {
  return c == ConstraintSet::NoLand || c == ConstraintSet::NoLandLat30 ||
         c == ConstraintSet::NoLandLat50;
}

track::ByteParams with_constraint(track::ByteParams base, ConstraintSet c) {
  base.exclude_land_genesis = needs_land_mask(c);
  switch (c) {
    case ConstraintSet::None:
    case ConstraintSet::NoLand: base.genesis_lat_max.reset(); break;
    case ConstraintSet::Lat30:
    case ConstraintSet::NoLandLat30: base.genesis_lat_max = 30.0; break;
    case ConstraintSet::Lat50:
    case ConstraintSet::NoLandLat50: base.genesis_lat_max = 50.0; break;
  }
  return base;
}

track::ByteParams TunerCandidate::params(const track::ByteParams& base) const {
  track::ByteParams p = with_constraint(base, constraint_set);
  p.bbox_size = bbox_size;
  p.track_buffer = track_buffer;
  p.match_threshold = match_threshold;
  p.track_threshold = track_threshold;
  p.low_score_floor = std::min(p.low_score_floor, track_threshold);
  return p;
}

void Weights::validate() const {
  const std::array<double, 4> w{w_pod, w_far, w_enp, w_wnp};
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw Error(ErrorKind::Config, "weights must be non-negative");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw Error(ErrorKind::Config, "weights must sum to 1");
}

std::vector<TunerCandidate> enumerate_candidates(const GridConfig& grid) {
  const std::set<double> boxes(grid.bbox_sizes.begin(), grid.bbox_sizes.end());
  const std::set<int> buffers(grid.track_buffers.begin(), grid.track_buffers.end());
  const std::set<ConstraintSet> constraints(grid.constraint_sets.begin(),
                                            grid.constraint_sets.end());
  std::vector<TunerCandidate> out;
  for (double box : boxes) {
    for (int buffer : buffers) {
      for (ConstraintSet c : constraints) {
        TunerCandidate cand;
        cand.bbox_size = box;
        cand.track_buffer = buffer;
        cand.match_threshold = grid.match_threshold;
        cand.track_threshold = grid.track_threshold;
        cand.constraint_set = c;
        out.push_back(cand);
      }
    }
  }
  return out;
}

bool dominates(const Objectives& x, const Objectives& y) {
  const bool no_worse =
      x.pod >= y.pod && x.far <= y.far && x.r_enp >= y.r_enp && x.r_wnp >= y.r_wnp;
  const bool better =
      x.pod > y.pod || x.far < y.far || x.r_enp > y.r_enp || x.r_wnp > y.r_wnp;
  return no_worse && better;
}

std::vector<std::size_t> pareto_frontier(std::span<const TunerCandidate> candidates) {
  // Sort by pod descending so any dominator of i precedes or ties with it.
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].metrics.pod > candidates[b].metrics.pod;
  });
  std::vector<std::size_t> frontier;
  std::vector<std::size_t> kept;  // non-dominated among those seen, by pod desc
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    const Objectives& xi = candidates[i].metrics;
    bool dominated = false;
    for (std::size_t k : kept) {
      if (dominates(candidates[k].metrics, xi)) {
        dominated = true;
        break;
      }
    }
    // Equal-pod peers later in the order can still dominate i.
    for (std::size_t q = pos + 1; !dominated && q < order.size() &&
                                  candidates[order[q]].metrics.pod == xi.pod;
         ++q) {
      if (dominates(candidates[order[q]].metrics, xi)) dominated = true;
    }
    if (!dominated) {
      kept.push_back(i);
      frontier.push_back(i);
    }
  }
  std::sort(frontier.begin(), frontier.end());
  return frontier;
}

std::size_t weighted_select(std::span<const TunerCandidate> candidates,
                            std::span<const std::size_t> frontier, const Weights& w) {
  if (frontier.empty()) throw Error(ErrorKind::InvalidArgument, "empty Pareto frontier");
  auto objective = [&](std::size_t i, int k) {
    const Objectives& o = candidates[i].metrics;
    switch (k) {
      case 0: return o.pod;
      case 1: return -o.far;
      case 2: return o.r_enp;
      default: return o.r_wnp;
    }
  };
  std::array<double, 4> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i : frontier) {
    for (int k = 0; k < 4; ++k) {
      lo[k] = std::min(lo[k], objective(i, k));
      hi[k] = std::max(hi[k], objective(i, k));
    }
  }
  const std::array<double, 4> weight{w.w_pod, w.w_far, w.w_enp, w.w_wnp};
  std::size_t best = frontier.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i : frontier) {
    double score = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double span = hi[k] - lo[k];
      const double norm = span > 0.0 ? (objective(i, k) - lo[k]) / span : 0.0;
      score += weight[k] * norm;
    }
    const TunerCandidate& c = candidates[i];
    const TunerCandidate& b = candidates[best];
    const bool better =
        score > best_score ||
        (score == best_score &&
         (c.metrics.far < b.metrics.far ||
          (c.metrics.far == b.metrics.far && c.bbox_size < b.bbox_size)));
    if (better) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

TunerCandidate evaluate_candidate(TunerCandidate candidate, const EvaluationInputs& in) {
  const track::ByteParams p = candidate.params(in.base);
  std::vector<Track> tracks = track::run_tracker(in.detections, p);
  tracks = track::apply_physical_filters(std::move(tracks), p, in.land);
  const eval::MetricsReport report = eval::compute_metrics(in.observed, tracks, in.metrics);
  candidate.metrics.pod = report.pod.value_or(0.0);
  candidate.metrics.far = report.far.value_or(0.0);
  candidate.r_enp_defined = report.r_enp.has_value();
  candidate.r_wnp_defined = report.r_wnp.has_value();
  candidate.metrics.r_enp = report.r_enp.value_or(0.0);
  candidate.metrics.r_wnp = report.r_wnp.value_or(0.0);
  return candidate;
}

std::vector<TunerCandidate> evaluate_all(std::vector<TunerCandidate> candidates,
                                         const EvaluationInputs& in, int jobs) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)),
                                                     candidates.size()));
  if (workers <= 1) {
    for (auto& c : candidates) c = evaluate_candidate(c, in);
    return candidates;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < candidates.size(); i += workers) {
          candidates[i] = evaluate_candidate(candidates[i], in);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return candidates;
}

std::vector<TunerCandidate> threshold_sweep(std::span<const double> match_thresholds,
                                            std::span<const double> track_thresholds,
                                            double bbox_size, int track_buffer,
                                            const EvaluationInputs& in, int jobs) {
  std::vector<TunerCandidate> candidates;
  for (double m : std::set<double>(match_thresholds.begin(), match_thresholds.end())) {
    for (double t : std::set<double>(track_thresholds.begin(), track_thresholds.end())) {
      TunerCandidate c;
      c.bbox_size = bbox_size;
      c.track_buffer = track_buffer;
      c.match_threshold = m;
      c.track_threshold = t;
      c.constraint_set = ConstraintSet::None;
      candidates.push_back(c);
    }
  }
  return evaluate_all(std::move(candidates), in, jobs);
}

TuneResult run_tuner(const GridConfig& grid, const EvaluationInputs& in, const Weights& w,
                     int jobs) {
  w.validate();
  TuneResult result;
  std::vector<TunerCandidate> candidates;
  bool skipped = false;
  for (auto& c : enumerate_candidates(grid)) {
    if (needs_land_mask(c.constraint_set) && in.land == nullptr) {
      skipped = true;
      continue;
    }
    candidates.push_back(c);
  }
  if (skipped) {
    result.warnings.push_back("land mask not supplied; land-genesis constraint sets skipped");
  }
  if (candidates.empty()) throw Error(ErrorKind::Config, "no tuner candidates to evaluate");
  result.candidates = evaluate_all(std::move(candidates), in, jobs);
  result.frontier = pareto_frontier(result.candidates);
  result.selected = weighted_select(result.candidates, result.frontier, w);
  return result;
}

}  // namespace bytestorm::tune

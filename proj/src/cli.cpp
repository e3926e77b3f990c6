#include "bytestorm/cli.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include "json.hpp"

#include "bytestorm/data.hpp"
#include "bytestorm/detect.hpp"
#include "bytestorm/io.hpp"
#include "bytestorm/nn.hpp"
#include "bytestorm/synth.hpp"

namespace bytestorm::cli {

namespace {

namespace fs = std::filesystem;

/// Runs fn(i) for i in [0, n) on up to `jobs` threads with static striding.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Grid geometry of the configured grids directory, or the synth grid when
/// no manifest exists yet.
geo::GridSpec grid_spec(const RunConfig& cfg) {
  const fs::path dir = cfg.resolve(cfg.paths.grids);
  if (fs::exists(dir / io::kManifestName)) return io::read_grid_spec(dir);
  return cfg.synth.grid;
}

std::optional<track::LandMask> land_mask(const RunConfig& cfg) {
  if (cfg.paths.land_mask.empty()) return std::nullopt;
  return io::read_land_mask(cfg.resolve(cfg.paths.land_mask));
}

nn::ArchConfig arch(const RunConfig& cfg, nn::Head head) {
  return cfg.train.arch == "paper" ? nn::ArchConfig::paper(head) : nn::ArchConfig::desk(head);
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const synth::Scenario sc = synth::generate(cfg.synth);
  io::write_grid(cfg.resolve(cfg.paths.grids), sc.series);
  io::write_tracks(cfg.resolve(cfg.paths.truth), sc.truth);
  std::vector<data::BestTrackPoint> points;
  for (const auto& t : sc.truth) {
    for (const auto& p : t.points) {
      data::BestTrackPoint b;
      b.storm_id = t.id;
      b.time = p.time;
      b.center = p.geo;
      b.nature = data::Nature::TS;
      points.push_back(b);
    }
  }
  io::write_best_track(cfg.resolve(cfg.paths.best_track), points);
  log << "synth: " << sc.series.frames.size() << " timesteps, " << sc.truth.size()
      << " storms\n";
}

void cmd_patchify(const RunConfig& cfg, std::ostream& log) {
  const data::GridSeries series = io::read_grid(cfg.resolve(cfg.paths.grids));
  series.validate();
  const auto best = data::filter_best_track(io::read_best_track(cfg.resolve(cfg.paths.best_track)),
                                            series.spec);
  std::map<Timestamp, std::vector<data::BestTrackPoint>> by_time;
  for (const auto& p : best) by_time[p.time].push_back(p);

  std::vector<std::vector<data::PatchSample>> maps;
  int skipped = 0, collisions = 0;
  for (const auto& frame : series.frames) {
    auto tiles = data::patchify(frame.values, series.spec.rows, series.spec.cols, frame.time);
    const auto it = by_time.find(frame.time);
    if (it == by_time.end()) continue;
    auto labelled = data::label_patches(std::move(tiles), it->second, series.spec);
    skipped += labelled.skipped;
    collisions += labelled.collisions;
    maps.push_back(std::move(labelled.patches));
  }
  std::vector<data::PatchSample> samples = data::select_training_patches(maps, cfg.patchify.seed);
  if (cfg.patchify.augment) {
    const std::size_t n = samples.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (samples[i].label != 1) continue;
      for (auto& a : data::augment(samples[i])) samples.push_back(std::move(a));
    }
  }
  io::write_patches(cfg.resolve(cfg.paths.patches), samples);
  const auto positives =
      std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.label == 1; });
  log << "patchify: " << samples.size() << " samples (" << positives << " positive), "
      << skipped << " centers outside grid, " << collisions << " shared tiles\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  auto samples = io::read_patches(cfg.resolve(cfg.paths.patches));
  if (cfg.train.split == "train") samples = data::split_dataset(std::move(samples)).train;
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "no training patches");
  const data::NormStats stats = data::compute_norm_stats(samples);
  nn::TrainConfig tc;
  tc.steps = cfg.train.steps;
  tc.batch_size = cfg.train.batch_size;
  tc.seed = cfg.train.seed;
  tc.lr = cfg.train.lr;
  tc.weight_decay = cfg.train.weight_decay;
  tc.schedule = nn::parse_lr_schedule(cfg.train.schedule);
  nn::TrainConfig loc_tc = tc;
  loc_tc.batch_size = cfg.train.loc_batch_size;
  loc_tc.lr = cfg.train.loc_lr;

  auto clf = nn::Network<float>::build(arch(cfg, nn::Head::Classification), cfg.train.init_seed);
  auto loc = nn::Network<float>::build(arch(cfg, nn::Head::Localization), cfg.train.init_seed + 1);
  clf.norm_stats = stats;
  loc.norm_stats = stats;
  const auto clf_losses = nn::train(clf, samples, tc);
  const auto loc_losses = nn::train(loc, samples, loc_tc);

  const fs::path dir = cfg.resolve(cfg.paths.models);
  fs::create_directories(dir);
  nn::save_model(clf, (dir / "classifier.model").string());
  nn::save_model(loc, (dir / "localizer.model").string());
  std::ofstream out(dir / "train_log.csv", std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + (dir / "train_log.csv").string());
  out << "step,classification_bce,localization_mae\n";
  const std::size_t n = std::max(clf_losses.size(), loc_losses.size());
  for (std::size_t i = 0; i < n; ++i) {
    out << i + 1 << ',' << (i < clf_losses.size() ? io::fixed6(clf_losses[i]) : "") << ','
        << (i < loc_losses.size() ? io::fixed6(loc_losses[i]) : "") << "\n";
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + (dir / "train_log.csv").string());
  log << "train: " << samples.size() << " samples, " << clf.param_count() << " + "
      << loc.param_count() << " parameters";
  if (!clf_losses.empty()) log << ", final bce " << io::fixed6(clf_losses.back());
  if (!loc_losses.empty()) log << ", final mae " << io::fixed6(loc_losses.back());
  log << "\n";
}

void cmd_detect(const RunConfig& cfg, std::ostream& log) {
  const data::GridSeries series = io::read_grid(cfg.resolve(cfg.paths.grids));
  series.validate();
  const auto& p = cfg.detect.params;
  std::vector<std::vector<Detection>> per_frame(series.frames.size());
  if (cfg.detect.detector == "neural") {
    const fs::path dir = cfg.resolve(cfg.paths.models);
    const auto clf = nn::load_model((dir / "classifier.model").string());
    const auto loc = nn::load_model((dir / "localizer.model").string());
    parallel_for(series.frames.size(), cfg.jobs, [&](std::size_t i) {
      per_frame[i] = detect::detect_neural_frame(series, i, clf, loc, p);
    });
  } else {
    parallel_for(series.frames.size(), cfg.jobs, [&](std::size_t i) {
      per_frame[i] = detect::detect_physics_frame(series, i, p);
    });
  }
  std::vector<Detection> dets;
  for (auto& f : per_frame) dets.insert(dets.end(), f.begin(), f.end());
  io::write_detections(cfg.resolve(cfg.paths.detections), dets);
  log << "detect: " << dets.size() << " detections over " << series.frames.size()
      << " timesteps\n";
}

std::vector<Track> build_tracks(const RunConfig& cfg, std::span<const Detection> dets,
                                const track::LandMask* land) {
  auto raw = track::run_tracker(dets, cfg.track);
  return track::apply_physical_filters(std::move(raw), cfg.track, land);
}

void cmd_track(const RunConfig& cfg, std::ostream& log) {
  const auto dets = io::read_detections(cfg.resolve(cfg.paths.detections), cfg.track.bbox_size);
  const auto land = land_mask(cfg);
  const auto tracks = build_tracks(cfg, dets, land ? &*land : nullptr);
  io::write_tracks(cfg.resolve(cfg.paths.tracks), tracks);
  log << "track: " << tracks.size() << " tracks from " << dets.size() << " detections\n";
}

struct Evaluated {
  std::vector<Track> observed;
  std::vector<Track> detected;
  eval::MetricsReport report;
};

Evaluated evaluate(const RunConfig& cfg) {
  const geo::GridSpec spec = grid_spec(cfg);
  Evaluated e;
  e.observed = io::read_observed(cfg.resolve(cfg.paths.observed), spec);
  e.detected = io::read_tracks(cfg.resolve(cfg.paths.tracks), spec);
  e.report = eval::compute_metrics(e.observed, e.detected, cfg.eval);
  return e;
}

void require_defined(const eval::MetricsReport& r) {
  if (!r.pod) throw Error(ErrorKind::UndefinedMetric, "POD undefined: no observed tracks");
  if (!r.far) throw Error(ErrorKind::UndefinedMetric, "FAR undefined: no hits and no false alarms");
}

void cmd_match(const RunConfig& cfg, std::ostream& log) {
  const geo::GridSpec spec = grid_spec(cfg);
  const auto observed = io::read_observed(cfg.resolve(cfg.paths.observed), spec);
  const auto detected = io::read_tracks(cfg.resolve(cfg.paths.tracks), spec);
  const auto report = eval::match_tracks(observed, detected, cfg.eval.match);
  const fs::path dir = cfg.resolve(cfg.paths.reports);
  fs::create_directories(dir);
  std::ofstream out(dir / "matches.csv", std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + (dir / "matches.csv").string());
  io::write_match_report(out, report);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + (dir / "matches.csv").string());
  log << "match: hits " << report.hits << ", misses " << report.misses << ", false alarms "
      << report.false_alarms << "\n";
}

void cmd_metrics(const RunConfig& cfg, std::ostream& log) {
  const Evaluated e = evaluate(cfg);
  io::write_metrics(cfg.resolve(cfg.paths.reports), e.report, cfg.eval);
  auto show = [](const std::optional<double>& v) { return v ? io::fixed6(*v) : "undefined"; };
  log << "metrics: pod " << show(e.report.pod) << ", far " << show(e.report.far) << "\n";
  require_defined(e.report);
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
  const Evaluated e = evaluate(cfg);
  const fs::path dir = cfg.resolve(cfg.paths.reports);
  io::write_metrics(dir, e.report, cfg.eval);
  io::write_report_tables(dir, e.report, cfg.eval, e.observed, e.detected);
  log << "report: tables written to " << dir.string() << "\n";
}

void cmd_tune(const RunConfig& cfg, std::ostream& log) {
  const geo::GridSpec spec = grid_spec(cfg);
  const auto dets = io::read_detections(cfg.resolve(cfg.paths.detections), cfg.track.bbox_size);
  const auto observed = io::read_observed(cfg.resolve(cfg.paths.observed), spec);
  const auto land = land_mask(cfg);

  tune::EvaluationInputs in;
  in.detections = dets;
  in.observed = observed;
  in.land = land ? &*land : nullptr;
  in.base = cfg.track;
  in.metrics = cfg.eval;

  const fs::path dir = cfg.resolve(cfg.paths.reports);
  if (!cfg.tune.sweep_match.empty()) {
    const auto sweep = tune::threshold_sweep(cfg.tune.sweep_match, cfg.tune.sweep_track,
                                             cfg.track.bbox_size, cfg.track.track_buffer, in,
                                             cfg.jobs);
    fs::create_directories(dir);
    std::ofstream out(dir / "threshold_sweep.csv", std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + (dir / "threshold_sweep.csv").string());
    out << "match_threshold,track_threshold,pod,far,r_enp,r_wnp\n";
    for (const auto& c : sweep) {
      out << io::fixed6(c.match_threshold) << ',' << io::fixed6(c.track_threshold) << ','
          << io::fixed6(c.metrics.pod) << ',' << io::fixed6(c.metrics.far) << ','
          << io::fixed6(c.metrics.r_enp) << ',' << io::fixed6(c.metrics.r_wnp) << "\n";
    }
    if (!out) throw Error(ErrorKind::Io, "write failed: threshold_sweep.csv");
  }
  const auto result = tune::run_tuner(cfg.tune.grid, in, cfg.tune.weights, cfg.jobs);
  io::write_tune_report(dir, result);
  for (const auto& w : result.warnings) log << "warning: " << w << "\n";
  const auto& s = result.candidates[result.selected];
  log << "tune: " << result.candidates.size() << " candidates, " << result.frontier.size()
      << " on the frontier; selected bbox " << s.bbox_size << ", buffer " << s.track_buffer
      << ", " << tune::to_string(s.constraint_set) << "\n";
}

using Command = void (*)(const RunConfig&, std::ostream&);

const std::map<std::string, Command, std::less<>>& commands() {
  static const std::map<std::string, Command, std::less<>> table{
      {"synth", cmd_synth},   {"patchify", cmd_patchify}, {"train", cmd_train},
      {"detect", cmd_detect}, {"track", cmd_track},       {"match", cmd_match},
      {"metrics", cmd_metrics}, {"tune", cmd_tune},       {"report", cmd_report},
  };
  return table;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownCommand: return 2;
    case ErrorKind::Config: return 3;
    case ErrorKind::Io: return 4;
    case ErrorKind::UndefinedMetric: return 5;
    case ErrorKind::InvalidArgument: return 6;
    case ErrorKind::DimensionMismatch: return 7;
    case ErrorKind::OutOfRange: return 8;
    case ErrorKind::Degenerate: return 9;
    case ErrorKind::Numeric: return 10;
  }
  return 1;
}

std::string error_line(ErrorKind kind, std::string_view message) {
  nlohmann::json j;
  j["error"] = std::string(to_string(kind));
  j["exit"] = exit_code(kind);
  j["message"] = std::string(message);
  return j.dump();
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"synth", "patchify", "train", "detect", "track",
                                              "match", "metrics",  "tune",  "report"};
  return names;
}

void execute(std::string_view name, const RunConfig& cfg, std::ostream& log) {
  const auto it = commands().find(name);
  if (it == commands().end()) {
    throw Error(ErrorKind::UnknownCommand, "unknown subcommand '" + std::string(name) + "'");
  }
  cfg.validate();
  it->second(cfg, log);
}

int run_subcommand(std::string_view name, const RunConfig& cfg, std::ostream& log,
                   std::ostream& err) {
  try {
    execute(name, cfg, log);
    return 0;
  } catch (const Error& e) {
    err << error_line(e.kind(), e.what()) << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << error_line(ErrorKind::Io, e.what()) << "\n";
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    nlohmann::json j;
    j["error"] = "internal";
    j["exit"] = 1;
    j["message"] = e.what();
    err << j.dump() << "\n";
    return 1;
  }
}

}  // namespace bytestorm::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bytestorm/detect.hpp"
#include "bytestorm/eval.hpp"
#include "bytestorm/nn.hpp"
#include "bytestorm/synth.hpp"
#include "bytestorm/tracker.hpp"
#include "bytestorm/tune.hpp"

namespace bytestorm::cli {

struct Paths {
  std::string grids = "grids";
  std::string best_track = "best_track.csv";
  std::string observed = "truth_tracks.csv";
  std::string truth = "truth_tracks.csv";
  std::string patches = "patches";
  std::string models = "models";
  std::string detections = "detections.csv";
  std::string tracks = "tracks.csv";
  std::string reports = "reports";
  std::string land_mask;  // empty: no mask
  friend bool operator==(const Paths&, const Paths&) = default;
};

struct PatchifyConfig {
  std::uint64_t seed = 1;
  bool augment = true;
  friend bool operator==(const PatchifyConfig&, const PatchifyConfig&) = default;
};

struct TrainSettings {
  std::string arch = "desk";  // desk | paper
  std::string split = "all";  // all | train: which samples to fit and normalize on
  int steps = 500;
  int batch_size = 16;
  double lr = 1e-3;
  int loc_batch_size = 32;  // localizer
  double loc_lr = 3e-3;     // localizer
  std::string schedule = "cosine";  // constant | cosine
  double weight_decay = 1e-2;
  std::uint64_t seed = 1;
  std::uint64_t init_seed = 7;
  friend bool operator==(const TrainSettings&, const TrainSettings&) = default;
};

struct DetectSettings {
  std::string detector = "physics";  // physics | neural
  detect::DetectorParams params;
  friend bool operator==(const DetectSettings&, const DetectSettings&) = default;
};

struct TuneSettings {
  tune::GridConfig grid;
  tune::Weights weights;
  std::vector<double> sweep_match;  // optional first-phase threshold sweep
  std::vector<double> sweep_track;
  friend bool operator==(const TuneSettings&, const TuneSettings&) = default;
};

/// Everything a subcommand needs. Relative paths resolve against `base_dir`.
struct RunConfig {
  Paths paths;
  int jobs = 1;
  synth::ScenarioConfig synth;
  PatchifyConfig patchify;
  TrainSettings train;
  DetectSettings detect;
  track::ByteParams track;
  eval::MetricsConfig eval;
  TuneSettings tune;
  std::filesystem::path base_dir;

  /// Throws Error(Config) on any out-of-bounds parameter.
  void validate() const;
  std::filesystem::path resolve(const std::string& p) const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// INI text with sections [paths] [run] [synth] [patchify] [train] [detect]
/// [track] [eval] [tune]. Unknown sections or keys are errors. `overrides`
/// are "section.key=value" strings applied on top of the file.
RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});
/// Writes every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

}  // namespace bytestorm::cli

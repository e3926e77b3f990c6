#include "bytestorm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bytestorm/error.hpp"

namespace bytestorm::cli {

namespace {

namespace pt = boost::property_tree;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

double parse_double(const std::string& s) {
  const std::string t = trimmed(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw Error(ErrorKind::Config, "expected a number, got '" + s + "'");
  }
  return v;
}

template <typename I>
I parse_integer(const std::string& s) {
  const std::string t = trimmed(s);
  I v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw Error(ErrorKind::Config, "expected an integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s) {
  const std::string t = trimmed(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw Error(ErrorKind::Config, "expected a boolean, got '" + s + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& s, Parse parse) {
  std::vector<T> out;
  std::istringstream in(s);
  std::string item;
  while (in >> item) {
    if (item.back() == ',') item.pop_back();
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

template <typename T, typename Fmt>
std::string format_list(const std::vector<T>& v, Fmt f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += f(v[i]);
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

Field str(std::string sec, std::string key, std::string& ref) {
  return {std::move(sec), std::move(key), [&ref] { return ref; },
          [&ref](const std::string& v) { ref = trimmed(v); }};
}

Field num(std::string sec, std::string key, double& ref) {
  return {std::move(sec), std::move(key), [&ref] { return fmt(ref); },
          [&ref](const std::string& v) { ref = parse_double(v); }};
}

template <typename I>
Field integer(std::string sec, std::string key, I& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::to_string(ref); },
          [&ref](const std::string& v) { ref = parse_integer<I>(v); }};
}

Field boolean(std::string sec, std::string key, bool& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref](const std::string& v) { ref = parse_bool(v); }};
}

Field num_list(std::string sec, std::string key, std::vector<double>& ref) {
  return {std::move(sec), std::move(key), [&ref] { return format_list(ref, fmt); },
          [&ref](const std::string& v) { ref = parse_list<double>(v, parse_double); }};
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  auto& p = c.paths;
  f.push_back(str("paths", "grids", p.grids));
  f.push_back(str("paths", "best_track", p.best_track));
  f.push_back(str("paths", "observed", p.observed));
  f.push_back(str("paths", "truth", p.truth));
  f.push_back(str("paths", "patches", p.patches));
  f.push_back(str("paths", "models", p.models));
  f.push_back(str("paths", "detections", p.detections));
  f.push_back(str("paths", "tracks", p.tracks));
  f.push_back(str("paths", "reports", p.reports));
  f.push_back(str("paths", "land_mask", p.land_mask));

  f.push_back(integer("run", "jobs", c.jobs));

  auto& s = c.synth;
  f.push_back(integer("synth", "n_storms", s.n_storms));
  f.push_back(integer("synth", "steps", s.steps));
  f.push_back(num("synth", "speed_kmh", s.speed_kmh));
  f.push_back(num("synth", "turn_rate_deg", s.turn_rate_deg));
  f.push_back(num("synth", "well_depth", s.well_depth));
  f.push_back(num("synth", "vorticity_amplitude", s.vorticity_amplitude));
  f.push_back(num("synth", "well_radius_cells", s.well_radius_cells));
  f.push_back(num("synth", "noise_std", s.noise_std));
  f.push_back(num("synth", "dropout_prob", s.dropout_prob));
  f.push_back(integer("synth", "seed", s.seed));
  f.push_back({"synth", "start", [&s] { return format_iso(s.start); },
               [&s](const std::string& v) {
                 try {
                   s.start = parse_iso(trimmed(v));
                 } catch (const Error& e) {
                   throw Error(ErrorKind::Config, e.what());
                 }
               }});
  f.push_back(num("synth", "lat0", s.grid.lat0));
  f.push_back(num("synth", "lon0", s.grid.lon0));
  f.push_back(num("synth", "d", s.grid.d));
  f.push_back(integer("synth", "rows", s.grid.rows));
  f.push_back(integer("synth", "cols", s.grid.cols));
  f.push_back(num("synth", "genesis_lat_min", s.genesis_lat_min));
  f.push_back(num("synth", "genesis_lat_max", s.genesis_lat_max));

  f.push_back(integer("patchify", "seed", c.patchify.seed));
  f.push_back(boolean("patchify", "augment", c.patchify.augment));

  auto& t = c.train;
  f.push_back(str("train", "arch", t.arch));
  f.push_back(str("train", "split", t.split));
  f.push_back(integer("train", "steps", t.steps));
  f.push_back(integer("train", "batch_size", t.batch_size));
  f.push_back(num("train", "lr", t.lr));
  f.push_back(integer("train", "loc_batch_size", t.loc_batch_size));
  f.push_back(num("train", "loc_lr", t.loc_lr));
  f.push_back(str("train", "schedule", t.schedule));
  f.push_back(num("train", "weight_decay", t.weight_decay));
  f.push_back(integer("train", "seed", t.seed));
  f.push_back(integer("train", "init_seed", t.init_seed));

  auto& d = c.detect;
  f.push_back(str("detect", "detector", d.detector));
  f.push_back(num("detect", "class_threshold", d.params.class_threshold));
  f.push_back(num("detect", "bbox_size", d.params.bbox_size));
  f.push_back(integer("detect", "dedupe_radius_cells", d.params.dedupe_radius_cells));

  auto& b = c.track;
  f.push_back(num("track", "track_threshold", b.track_threshold));
  f.push_back(num("track", "match_threshold", b.match_threshold));
  f.push_back(integer("track", "track_buffer", b.track_buffer));
  f.push_back(num("track", "low_score_floor", b.low_score_floor));
  f.push_back(num("track", "bbox_size", b.bbox_size));
  f.push_back(num("track", "max_displacement_km", b.max_displacement_km));
  f.push_back(integer("track", "min_track_steps", b.min_track_steps));
  f.push_back({"track", "genesis_lat_max",
               [&b] { return b.genesis_lat_max ? fmt(*b.genesis_lat_max) : std::string("none"); },
               [&b](const std::string& v) {
                 if (trimmed(v) == "none") b.genesis_lat_max.reset();
                 else b.genesis_lat_max = parse_double(v);
               }});
  f.push_back(boolean("track", "exclude_land_genesis", b.exclude_land_genesis));
  f.push_back({"track", "motion", [&b] { return std::string(track::to_string(b.motion)); },
               [&b](const std::string& v) {
                 try {
                   b.motion = track::parse_motion_model(trimmed(v));
                 } catch (const Error& e) {
                   throw Error(ErrorKind::Config, e.what());
                 }
               }});

  auto& e = c.eval;
  f.push_back(num("eval", "radius_km", e.match.radius_km));
  f.push_back(integer("eval", "min_matched_steps", e.match.min_matched_steps));
  f.push_back(integer("eval", "iav_month", e.iav_month));
  f.push_back(integer("eval", "year_from", e.year_from));
  f.push_back(integer("eval", "year_to", e.year_to));

  auto& g = c.tune;
  f.push_back(num_list("tune", "bbox_sizes", g.grid.bbox_sizes));
  f.push_back({"tune", "track_buffers",
               [&g] { return format_list(g.grid.track_buffers, [](int x) { return std::to_string(x); }); },
               [&g](const std::string& v) {
                 g.grid.track_buffers = parse_list<int>(v, parse_integer<int>);
               }});
  f.push_back({"tune", "constraint_sets",
               [&g] {
                 return format_list(g.grid.constraint_sets, [](tune::ConstraintSet cs) {
                   return std::string(tune::to_string(cs));
                 });
               },
               [&g](const std::string& v) {
                 g.grid.constraint_sets = parse_list<tune::ConstraintSet>(v, [](const std::string& x) {
                   try {
                     return tune::parse_constraint_set(x);
                   } catch (const Error& err) {
                     throw Error(ErrorKind::Config, err.what());
                   }
                 });
               }});
  f.push_back(num("tune", "match_threshold", g.grid.match_threshold));
  f.push_back(num("tune", "track_threshold", g.grid.track_threshold));
  f.push_back(num("tune", "w_pod", g.weights.w_pod));
  f.push_back(num("tune", "w_far", g.weights.w_far));
  f.push_back(num("tune", "w_enp", g.weights.w_enp));
  f.push_back(num("tune", "w_wnp", g.weights.w_wnp));
  f.push_back(num_list("tune", "sweep_match", g.sweep_match));
  f.push_back(num_list("tune", "sweep_track", g.sweep_track));
  return f;
}

void assign(std::vector<Field>& fs, const std::string& section, const std::string& key,
            const std::string& value) {
  for (auto& f : fs) {
    if (f.section == section && f.key == key) {
      try {
        f.set(value);
      } catch (const Error& e) {
        throw Error(ErrorKind::Config, section + "." + key + ": " + e.what());
      }
      return;
    }
  }
  throw Error(ErrorKind::Config, "unknown config key " + section + "." + key);
}

}  // namespace

void RunConfig::validate() const {
  try {
    if (jobs < 1) throw Error(ErrorKind::Config, "jobs must be >= 1");
    synth.validate();
    if (train.arch != "desk" && train.arch != "paper") {
      throw Error(ErrorKind::Config, "train.arch must be desk or paper");
    }
    if (train.split != "all" && train.split != "train") {
      throw Error(ErrorKind::Config, "train.split must be all or train");
    }
    if (train.steps < 0 || train.batch_size < 1 || train.loc_batch_size < 1 ||
        !(train.lr > 0.0) || !(train.loc_lr > 0.0) || !(train.weight_decay >= 0.0)) {
      throw Error(ErrorKind::Config, "train needs steps >= 0, batch sizes >= 1, lr > 0, wd >= 0");
    }
    if (train.schedule != "constant" && train.schedule != "cosine") {
      throw Error(ErrorKind::Config, "train.schedule must be constant or cosine");
    }
    if (detect.detector != "physics" && detect.detector != "neural") {
      throw Error(ErrorKind::Config, "detect.detector must be physics or neural");
    }
    detect.params.validate();
    track.validate();
    if (!(eval.match.radius_km > 0.0) || eval.match.min_matched_steps < 1) {
      throw Error(ErrorKind::Config, "eval needs radius_km > 0 and min_matched_steps >= 1");
    }
    if (eval.iav_month < 1 || eval.iav_month > 12 || eval.year_from > eval.year_to) {
      throw Error(ErrorKind::Config, "eval needs iav_month in 1..12 and year_from <= year_to");
    }
    tune.weights.validate();
    if (tune.grid.bbox_sizes.empty() || tune.grid.track_buffers.empty() ||
        tune.grid.constraint_sets.empty()) {
      throw Error(ErrorKind::Config, "tune grids must be non-empty");
    }
    if (tune.sweep_match.empty() != tune.sweep_track.empty()) {
      throw Error(ErrorKind::Config, "tune.sweep_match and tune.sweep_track go together");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    throw Error(ErrorKind::Config, e.what());
  }
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides) {
  RunConfig c;
  auto fs = fields(c);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::Config, std::string("config syntax: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::Config, "key outside a section: " + section);
    }
    for (const auto& [key, value] : body) assign(fs, section, key, value.data());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw Error(ErrorKind::Config, "override must look like section.key=value: " + o);
    }
    assign(fs, trimmed(o.substr(0, dot)), trimmed(o.substr(dot + 1, eq - dot - 1)),
           o.substr(eq + 1));
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  RunConfig c = parse_config(in, overrides);
  c.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return c;
}

std::string serialize_config(const RunConfig& c) {
  RunConfig copy = c;
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) out << "\n";
      section = f.section;
      out << "[" << section << "]\n";
    }
    out << f.key << " = " << f.get() << "\n";
  }
  return out.str();
}

}  // namespace bytestorm::cli

#include "bytestorm/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "bytestorm/error.hpp"

namespace bytestorm {

std::vector<Track> tracks_from_best_track(std::span<const data::BestTrackPoint> points,
                                          const geo::GridSpec& spec) {
  std::vector<Track> tracks;
  std::map<std::string, std::size_t> index;
  for (const auto& p : points) {
    auto [it, fresh] = index.emplace(p.storm_id, tracks.size());
    if (fresh) {
      Track t;
      t.id = p.storm_id;
      t.state = TrackState::Finished;
      t.basin = p.basin;
      tracks.push_back(std::move(t));
    }
    const geo::GridPos gp = geo::geo_to_grid_pos(p.center, spec);
    tracks[it->second].points.push_back(TrackPoint{p.time, p.center, gp.row, gp.col, 1.0, p.msw});
  }
  for (auto& t : tracks) {
    std::stable_sort(t.points.begin(), t.points.end(),
                     [](const TrackPoint& a, const TrackPoint& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      if (t.points[i].time == t.points[i - 1].time) {
        throw Error(ErrorKind::InvalidArgument,
                    "storm " + t.id + " repeats time " + format_iso(t.points[i].time));
      }
    }
  }
  return tracks;
}

}  // namespace bytestorm

namespace bytestorm::io {

namespace {

using nlohmann::json;

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double to_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Io, "bad " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

long long to_int(std::string_view s, std::string_view what) {
  s = trim(s);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Io, "bad " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Reads the header line and checks it.
void expect_header(std::istream& in, std::string_view header, std::string_view what) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) {
    throw Error(ErrorKind::Io, std::string(what) + ": expected header '" + std::string(header) + "'");
  }
}

template <typename Fn>
void with_context(std::size_t line_no, std::string_view what, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    throw Error(ErrorKind::Io,
                std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
  }
}

void write_f32le(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float f : values) {
      const auto u = std::bit_cast<std::uint32_t>(f);
      const char b[4] = {static_cast<char>(u), static_cast<char>(u >> 8),
                         static_cast<char>(u >> 16), static_cast<char>(u >> 24)};
      out.write(b, 4);
    }
  }
}

std::vector<float> read_f32le(const fs::path& path, std::size_t count) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot stat " + path.string());
  if (size != count * sizeof(float)) {
    throw Error(ErrorKind::Io, path.string() + ": expected " +
                                   std::to_string(count * sizeof(float)) + " bytes, found " +
                                   std::to_string(size));
  }
  std::vector<float> values(count);
  auto in = open_in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw Error(ErrorKind::Io, "short read: " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : values) {
      auto u = std::bit_cast<std::uint32_t>(f);
      u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
      f = std::bit_cast<float>(u);
    }
  }
  return values;
}

std::string blob_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%06zu.f32", i);
  return buf;
}

std::string_view nullable(const std::optional<double>& v, std::string& storage) {
  if (!v) return "";
  storage = fixed6(*v);
  return storage;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // Avoid "-0.000000" so equal values print identically.
  if (std::strcmp(buf, "-0.000000") == 0) return "0.000000";
  return buf;
}

// ---------------------------------------------------------------- grid

void write_grid(const fs::path& dir, const data::GridSeries& series) {
  series.validate_layout();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string());

  const fs::path manifest = dir / kManifestName;
  auto out = open_out(manifest);
  out << "bytestorm-grid 1\n";
  out << "rows " << series.spec.rows << "\n";
  out << "cols " << series.spec.cols << "\n";
  out << "lat0 " << shortest(series.spec.lat0) << "\n";
  out << "lon0 " << shortest(series.spec.lon0) << "\n";
  out << "d " << shortest(series.spec.d) << "\n";
  out << "vars";
  for (const auto& v : series.vars) out << ' ' << v;
  out << "\n";
  out << "dtype f32le\n";
  out << "layout " << kGridLayout << "\n";
  out << "timesteps " << series.frames.size() << "\n";
  for (std::size_t i = 0; i < series.frames.size(); ++i) {
    out << format_iso(series.frames[i].time) << ' ' << blob_name(i) << "\n";
  }
  finish(out, manifest);

  for (std::size_t i = 0; i < series.frames.size(); ++i) {
    const fs::path blob = dir / blob_name(i);
    auto bout = open_out(blob, std::ios::binary);
    write_f32le(bout, series.frames[i].values);
    finish(bout, blob);
  }
}

namespace {

struct ManifestHead {
  data::GridSeries series;  // spec and vars only
  std::size_t n_steps = 0;
};

ManifestHead read_manifest_head(std::istream& in, const fs::path& manifest) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "bytestorm-grid 1") {
    throw Error(ErrorKind::Io, manifest.string() + ": not a grid manifest");
  }
  std::map<std::string, std::string> kv;
  ManifestHead head;
  bool have_steps = false;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto sp = t.find(' ');
    const std::string key(t.substr(0, sp));
    const std::string value(sp == std::string_view::npos ? "" : trim(t.substr(sp + 1)));
    kv[key] = value;
    if (key == "timesteps") {
      head.n_steps = static_cast<std::size_t>(to_int(value, "timesteps"));
      have_steps = true;
      break;
    }
  }
  if (!have_steps) throw Error(ErrorKind::Io, manifest.string() + ": missing timesteps");
  for (const char* key : {"rows", "cols", "lat0", "lon0", "d", "vars", "dtype", "layout"}) {
    if (!kv.count(key)) throw Error(ErrorKind::Io, manifest.string() + ": missing " + key);
  }
  if (kv["dtype"] != "f32le") throw Error(ErrorKind::Io, "unsupported dtype " + kv["dtype"]);
  if (kv["layout"] != kGridLayout) throw Error(ErrorKind::Io, "unsupported layout " + kv["layout"]);

  data::GridSeries& s = head.series;
  s.spec.rows = static_cast<int>(to_int(kv["rows"], "rows"));
  s.spec.cols = static_cast<int>(to_int(kv["cols"], "cols"));
  s.spec.lat0 = to_double(kv["lat0"], "lat0");
  s.spec.lon0 = to_double(kv["lon0"], "lon0");
  s.spec.d = to_double(kv["d"], "d");
  try {
    s.spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Io, manifest.string() + ": " + e.what());
  }
  for (auto v : split(kv["vars"], ' ')) {
    if (!v.empty()) s.vars.emplace_back(v);
  }
  if (s.vars.empty()) throw Error(ErrorKind::Io, manifest.string() + ": no variables");
  return head;
}

}  // namespace

geo::GridSpec read_grid_spec(const fs::path& dir) {
  const fs::path manifest = dir / kManifestName;
  auto in = open_in(manifest);
  return read_manifest_head(in, manifest).series.spec;
}

data::GridSeries read_grid(const fs::path& dir) {
  const fs::path manifest = dir / kManifestName;
  auto in = open_in(manifest);
  ManifestHead head = read_manifest_head(in, manifest);
  data::GridSeries s = std::move(head.series);
  const std::size_t n_steps = head.n_steps;
  std::string line;
  const std::size_t count = s.vars.size() * s.cells();
  for (std::size_t i = 0; i < n_steps; ++i) {
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, manifest.string() + ": truncated");
    const auto parts = split(trim(line), ' ');
    if (parts.size() != 2) throw Error(ErrorKind::Io, manifest.string() + ": bad timestep line");
    data::Frame f;
    with_context(i + 1, "manifest timestep", [&] { f.time = parse_iso(parts[0]); });
    const fs::path blob = dir / std::string(parts[1]);
    f.values = read_f32le(blob, count);
    s.frames.push_back(std::move(f));
  }
  try {
    s.validate_layout();
  } catch (const Error& e) {
    throw Error(ErrorKind::Io, manifest.string() + ": " + e.what());
  }
  return s;
}

void write_land_mask(const fs::path& dir, const track::LandMask& mask) {
  data::GridSeries s;
  s.spec = mask.spec;
  s.vars = {"land"};
  data::Frame f;
  f.time = make_time(2000, 1, 1);
  f.values.resize(mask.land.size());
  for (std::size_t i = 0; i < mask.land.size(); ++i) f.values[i] = mask.land[i] ? 1.0f : 0.0f;
  s.frames.push_back(std::move(f));
  write_grid(dir, s);
}

track::LandMask read_land_mask(const fs::path& dir) {
  const data::GridSeries s = read_grid(dir);
  if (s.vars.size() != 1 || s.vars[0] != "land" || s.frames.empty()) {
    throw Error(ErrorKind::Io, dir.string() + ": land mask needs one variable 'land'");
  }
  track::LandMask mask;
  mask.spec = s.spec;
  mask.land.resize(s.cells());
  const auto& v = s.frames.front().values;
  for (std::size_t i = 0; i < mask.land.size(); ++i) mask.land[i] = v[i] > 0.5f ? 1 : 0;
  return mask;
}

// ---------------------------------------------------------------- best track

void write_best_track(std::ostream& out, std::span<const data::BestTrackPoint> points) {
  out << kBestTrackHeader << "\n";
  std::string msw;
  for (const auto& p : points) {
    out << p.storm_id << ',' << format_iso(p.time) << ',' << fixed6(p.center.lat) << ','
        << fixed6(p.center.lon) << ',' << nullable(p.msw, msw) << ',' << to_string(p.nature)
        << ',' << to_string(p.track_type) << ',' << to_string(p.basin) << "\n";
  }
}

std::vector<data::BestTrackPoint> read_best_track(std::istream& in) {
  expect_header(in, kBestTrackHeader, "best-track CSV");
  std::vector<data::BestTrackPoint> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    with_context(line_no, "best-track CSV", [&] {
      const auto f = split(trim(line), ',');
      if (f.size() != 8) throw Error(ErrorKind::Io, "expected 8 fields");
      data::BestTrackPoint p;
      p.storm_id = std::string(trim(f[0]));
      if (p.storm_id.empty()) throw Error(ErrorKind::Io, "empty storm_id");
      p.time = parse_iso(trim(f[1]));
      p.center = geo::GeoPoint::make(to_double(f[2], "lat"), to_double(f[3], "lon"));
      if (!trim(f[4]).empty()) p.msw = to_double(f[4], "msw");
      p.nature = data::parse_nature(trim(f[5]));
      p.track_type = data::parse_track_type(trim(f[6]));
      p.basin = data::parse_basin(trim(f[7]));
      out.push_back(std::move(p));
    });
  }
  return out;
}

void write_best_track(const fs::path& path, std::span<const data::BestTrackPoint> points) {
  auto out = open_out(path);
  write_best_track(out, points);
  finish(out, path);
}

std::vector<data::BestTrackPoint> read_best_track(const fs::path& path) {
  auto in = open_in(path);
  return read_best_track(in);
}

// ---------------------------------------------------------------- detections

void write_detections(std::ostream& out, std::span<const Detection> dets) {
  out << kDetectionsHeader << "\n";
  for (const auto& d : dets) {
    out << format_iso(d.time) << ',' << fixed6(d.row) << ',' << fixed6(d.col) << ','
        << fixed6(d.geo.lat) << ',' << fixed6(d.geo.lon) << ',' << fixed6(d.score) << "\n";
  }
}

std::vector<Detection> read_detections(std::istream& in, double bbox_size) {
  expect_header(in, kDetectionsHeader, "detections CSV");
  std::vector<Detection> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    with_context(line_no, "detections CSV", [&] {
      const auto f = split(trim(line), ',');
      if (f.size() != 6) throw Error(ErrorKind::Io, "expected 6 fields");
      Detection d;
      d.time = parse_iso(trim(f[0]));
      d.row = to_double(f[1], "row");
      d.col = to_double(f[2], "col");
      d.geo = geo::GeoPoint::make(to_double(f[3], "lat"), to_double(f[4], "lon"));
      d.score = to_double(f[5], "score");
      if (!(d.score >= 0.0 && d.score <= 1.0)) throw Error(ErrorKind::Io, "score outside [0, 1]");
      d.bbox_size = bbox_size;
      out.push_back(d);
    });
  }
  return out;
}

void write_detections(const fs::path& path, std::span<const Detection> dets) {
  auto out = open_out(path);
  write_detections(out, dets);
  finish(out, path);
}

std::vector<Detection> read_detections(const fs::path& path, double bbox_size) {
  auto in = open_in(path);
  return read_detections(in, bbox_size);
}

// ---------------------------------------------------------------- tracks

bool track_id_less(const std::string& a, const std::string& b) {
  auto digits = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (digits(a) && digits(b)) {
    const auto na = a.find_first_not_of('0'), nb = b.find_first_not_of('0');
    const std::string_view ta = na == std::string::npos ? "" : std::string_view(a).substr(na);
    const std::string_view tb = nb == std::string::npos ? "" : std::string_view(b).substr(nb);
    if (ta.size() != tb.size()) return ta.size() < tb.size();
    if (ta != tb) return ta < tb;
  }
  return a < b;
}

void write_tracks(std::ostream& out, std::span<const Track> tracks) {
  std::vector<const Track*> order;
  for (const auto& t : tracks) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(),
                   [](const Track* a, const Track* b) { return track_id_less(a->id, b->id); });
  out << kTracksHeader << "\n";
  for (const Track* t : order) {
    if (t->points.empty()) continue;
    std::vector<const TrackPoint*> pts;
    for (const auto& p : t->points) pts.push_back(&p);
    std::stable_sort(pts.begin(), pts.end(),
                     [](const TrackPoint* a, const TrackPoint* b) { return a->time < b->time; });
    out << "# track=" << t->id << " points=" << pts.size()
        << " genesis=" << format_iso(pts.front()->time)
        << " lysis=" << format_iso(pts.back()->time) << "\n";
    for (const TrackPoint* p : pts) {
      out << t->id << ',' << format_iso(p->time) << ',' << fixed6(p->geo.lat) << ','
          << fixed6(p->geo.lon) << ',' << fixed6(p->score) << "\n";
    }
  }
}

std::vector<Track> read_tracks(std::istream& in, const geo::GridSpec& spec) {
  expect_header(in, kTracksHeader, "tracks CSV");
  std::vector<Track> out;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    with_context(line_no, "tracks CSV", [&] {
      const auto f = split(t, ',');
      if (f.size() != 5) throw Error(ErrorKind::Io, "expected 5 fields");
      const std::string id(trim(f[0]));
      if (id.empty()) throw Error(ErrorKind::Io, "empty track_id");
      auto [it, fresh] = index.emplace(id, out.size());
      if (fresh) {
        Track tr;
        tr.id = id;
        tr.state = TrackState::Finished;
        out.push_back(std::move(tr));
      }
      TrackPoint p;
      p.time = parse_iso(trim(f[1]));
      p.geo = geo::GeoPoint::make(to_double(f[2], "lat"), to_double(f[3], "lon"));
      const geo::GridPos gp = geo::geo_to_grid_pos(p.geo, spec);
      p.row = gp.row;
      p.col = gp.col;
      p.score = to_double(f[4], "score");
      auto& pts = out[it->second].points;
      if (!pts.empty() && !(pts.back().time < p.time)) {
        throw Error(ErrorKind::Io, "track " + id + " is not in time order");
      }
      pts.push_back(p);
    });
  }
  return out;
}

void write_tracks(const fs::path& path, std::span<const Track> tracks) {
  auto out = open_out(path);
  write_tracks(out, tracks);
  finish(out, path);
}

std::vector<Track> read_tracks(const fs::path& path, const geo::GridSpec& spec) {
  auto in = open_in(path);
  return read_tracks(in, spec);
}

std::vector<Track> read_observed(const fs::path& path, const geo::GridSpec& spec) {
  std::string first;
  {
    auto in = open_in(path);
    std::getline(in, first);
  }
  if (trim(first) == kBestTrackHeader) {
    const auto points = read_best_track(path);
    const auto kept = data::filter_best_track(points, spec);
    return tracks_from_best_track(kept, spec);
  }
  return read_tracks(path, spec);
}

// ---------------------------------------------------------------- patches

void write_patches(const fs::path& dir, std::span<const data::PatchSample> samples) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string());
  const fs::path meta = dir / "patches.csv";
  const fs::path blob = dir / "patches.f32";
  auto out = open_out(meta);
  auto bout = open_out(blob, std::ios::binary);
  out << "index,map_time,patch_row,patch_col,label,center_row,center_col,kind,split\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.pixels.size() != data::kPatchPixels) {
      throw Error(ErrorKind::DimensionMismatch, "patch pixel count mismatch");
    }
    out << i << ',' << format_iso(s.map_time) << ',' << s.patch_row << ',' << s.patch_col << ','
        << s.label << ',';
    if (s.center) out << s.center->row << ',' << s.center->col;
    else out << ',';
    out << ',' << to_string(s.kind) << ',' << to_string(data::split_of(s.map_time)) << "\n";
    write_f32le(bout, s.pixels);
  }
  finish(out, meta);
  finish(bout, blob);
}

std::vector<data::PatchSample> read_patches(const fs::path& dir) {
  const fs::path meta = dir / "patches.csv";
  auto in = open_in(meta);
  expect_header(in, "index,map_time,patch_row,patch_col,label,center_row,center_col,kind,split",
                "patches CSV");
  std::vector<data::PatchSample> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    with_context(line_no, "patches CSV", [&] {
      const auto f = split(trim(line), ',');
      if (f.size() != 9) throw Error(ErrorKind::Io, "expected 9 fields");
      if (to_int(f[0], "index") != static_cast<long long>(out.size())) {
        throw Error(ErrorKind::Io, "index out of sequence");
      }
      data::PatchSample s;
      s.map_time = parse_iso(trim(f[1]));
      s.patch_row = static_cast<int>(to_int(f[2], "patch_row"));
      s.patch_col = static_cast<int>(to_int(f[3], "patch_col"));
      s.label = static_cast<int>(to_int(f[4], "label"));
      if (s.label != 0 && s.label != 1) throw Error(ErrorKind::Io, "label must be 0 or 1");
      if (!trim(f[5]).empty()) {
        s.center = geo::Cell{static_cast<int>(to_int(f[5], "center_row")),
                             static_cast<int>(to_int(f[6], "center_col"))};
      }
      s.kind = data::parse_patch_kind(trim(f[7]));
      out.push_back(std::move(s));
    });
  }
  const auto pixels = read_f32le(dir / "patches.f32", out.size() * data::kPatchPixels);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto first = pixels.begin() + static_cast<std::ptrdiff_t>(i * data::kPatchPixels);
    out[i].pixels.assign(first, first + static_cast<std::ptrdiff_t>(data::kPatchPixels));
  }
  return out;
}

// ---------------------------------------------------------------- reports

void write_match_report(std::ostream& out, const eval::MatchReport& r) {
  out << "obs_id,det_id,matched_steps,mean_distance_km\n";
  for (const auto& p : r.pairs) {
    out << p.obs_id << ',' << p.det_id << ',' << p.matched_steps << ','
        << fixed6(p.mean_distance_km) << "\n";
  }
}

std::string metrics_json(const eval::MetricsReport& r, const eval::MetricsConfig& cfg) {
  json j;
  j["config"] = {{"radius_km", cfg.match.radius_km},
                 {"min_matched_steps", cfg.match.min_matched_steps},
                 {"iav_month", cfg.iav_month},
                 {"year_from", cfg.year_from},
                 {"year_to", cfg.year_to}};
  j["hits"] = r.match.hits;
  j["misses"] = r.match.misses;
  j["false_alarms"] = r.match.false_alarms;
  j["pod"] = optional_json(r.pod);
  j["far"] = optional_json(r.far);
  j["iav_pearson_detrended"] = optional_json(r.iav_pearson_detrended);
  j["r_enp"] = optional_json(r.r_enp);
  j["r_wnp"] = optional_json(r.r_wnp);
  j["iav_observed"] = r.iav_observed;
  j["iav_detected"] = r.iav_detected;
  auto hist = [](const std::map<int, int>& h) {
    json a = json::array();
    for (const auto& [day, n] : h) a.push_back({day, n});
    return a;
  };
  j["duration_hist_observed"] = hist(r.duration_hist_observed);
  j["duration_hist_detected"] = hist(r.duration_hist_detected);
  auto smooth = [](const eval::SmoothnessStats& s) {
    return json{{"n", s.sigma.size()}, {"excluded", s.excluded},
                {"q1", s.q1},          {"median", s.median},
                {"q3", s.q3}};
  };
  j["smoothness_observed"] = smooth(r.smoothness_observed);
  j["smoothness_detected"] = smooth(r.smoothness_detected);
  j["seasonal_observed"] = r.seasonal_observed;
  j["seasonal_detected"] = r.seasonal_detected;
  j["latlon_pairs"] = r.latlon_pairs.size();
  return j.dump(2) + "\n";
}

void write_metrics(const fs::path& dir, const eval::MetricsReport& r,
                   const eval::MetricsConfig& cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path summary = dir / "summary.txt";
  auto out = open_out(summary);
  auto opt = [](const std::optional<double>& v) { return v ? fixed6(*v) : std::string("undefined"); };
  out << "hits " << r.match.hits << "\n";
  out << "misses " << r.match.misses << "\n";
  out << "false_alarms " << r.match.false_alarms << "\n";
  out << "pod " << opt(r.pod) << "\n";
  out << "far " << opt(r.far) << "\n";
  out << "iav_pearson_detrended " << opt(r.iav_pearson_detrended) << "\n";
  out << "r_enp " << opt(r.r_enp) << "\n";
  out << "r_wnp " << opt(r.r_wnp) << "\n";
  out << "smoothness_median_observed " << fixed6(r.smoothness_observed.median) << "\n";
  out << "smoothness_median_detected " << fixed6(r.smoothness_detected.median) << "\n";
  finish(out, summary);

  const fs::path js = dir / "metrics.json";
  auto jout = open_out(js);
  jout << metrics_json(r, cfg);
  finish(jout, js);
}

void write_report_tables(const fs::path& dir, const eval::MetricsReport& r,
                         const eval::MetricsConfig& cfg, std::span<const Track> observed,
                         std::span<const Track> detected) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    const fs::path p = dir / "iav.csv";
    auto out = open_out(p);
    out << "year,observed,detected\n";
    for (std::size_t i = 0; i < r.iav_observed.size(); ++i) {
      out << cfg.year_from + static_cast<int>(i) << ',' << r.iav_observed[i] << ','
          << (i < r.iav_detected.size() ? r.iav_detected[i] : 0) << "\n";
    }
    finish(out, p);
  }
  {
    const fs::path p = dir / "duration_hist.csv";
    auto out = open_out(p);
    out << "days,observed,detected\n";
    std::map<int, std::pair<int, int>> merged;
    for (const auto& [k, n] : r.duration_hist_observed) merged[k].first = n;
    for (const auto& [k, n] : r.duration_hist_detected) merged[k].second = n;
    for (const auto& [k, v] : merged) out << k << ',' << v.first << ',' << v.second << "\n";
    finish(out, p);
  }
  {
    const fs::path p = dir / "smoothness.csv";
    auto out = open_out(p);
    out << "set,track_id,sigma_deg\n";
    auto rows = [&](std::string_view set, const eval::SmoothnessStats& s) {
      for (std::size_t i = 0; i < s.sigma.size(); ++i) {
        out << set << ',' << s.track_ids[i] << ',' << fixed6(s.sigma[i]) << "\n";
      }
    };
    rows("observed", r.smoothness_observed);
    rows("detected", r.smoothness_detected);
    finish(out, p);
  }
  {
    const fs::path p = dir / "seasonal.csv";
    auto out = open_out(p);
    out << "month,observed,detected\n";
    for (int m = 0; m < 12; ++m) {
      out << m + 1 << ',' << r.seasonal_observed[static_cast<std::size_t>(m)] << ','
          << r.seasonal_detected[static_cast<std::size_t>(m)] << "\n";
    }
    finish(out, p);
  }
  {
    const fs::path p = dir / "latlon_scatter.csv";
    auto out = open_out(p);
    out << "obs_id,det_id,iso_time,true_lat,true_lon,pred_lat,pred_lon,msw\n";
    std::string msw;
    for (const auto& t : r.latlon_pairs) {
      out << t.obs_id << ',' << t.det_id << ',' << format_iso(t.time) << ','
          << fixed6(t.truth.lat) << ',' << fixed6(t.truth.lon) << ',' << fixed6(t.predicted.lat)
          << ',' << fixed6(t.predicted.lon) << ',' << nullable(t.msw, msw) << "\n";
    }
    finish(out, p);
  }
  {
    const fs::path p = dir / "tracks_overlay.csv";
    auto out = open_out(p);
    out << "set,track_id,iso_time,lat,lon,score\n";
    auto rows = [&](std::string_view set, std::span<const Track> tracks) {
      std::vector<const Track*> order;
      for (const auto& t : tracks) order.push_back(&t);
      std::stable_sort(order.begin(), order.end(), [](const Track* a, const Track* b) {
        return track_id_less(a->id, b->id);
      });
      for (const Track* t : order) {
        for (const auto& pt : t->points) {
          out << set << ',' << t->id << ',' << format_iso(pt.time) << ',' << fixed6(pt.geo.lat)
              << ',' << fixed6(pt.geo.lon) << ',' << fixed6(pt.score) << "\n";
        }
      }
    };
    rows("observed", observed);
    rows("detected", detected);
    finish(out, p);
  }
}

void write_tune_report(const fs::path& dir, const tune::TuneResult& result) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto& cands = result.candidates;
  std::vector<char> on_front(cands.size(), 0);
  for (auto i : result.frontier) on_front[i] = 1;

  std::vector<std::size_t> order(cands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rank = [&](std::size_t i) { return i == result.selected ? 0 : (on_front[i] ? 1 : 2); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rank(a) < rank(b); });

  const fs::path table = dir / "tune_candidates.csv";
  auto out = open_out(table);
  out << "rank,bbox_size,track_buffer,match_threshold,track_threshold,constraint_set,pod,far,"
         "r_enp,r_wnp,r_enp_defined,r_wnp_defined,frontier,selected\n";
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& c = cands[order[k]];
    out << k + 1 << ',' << shortest(c.bbox_size) << ',' << c.track_buffer << ','
        << fixed6(c.match_threshold) << ',' << fixed6(c.track_threshold) << ','
        << tune::to_string(c.constraint_set) << ',' << fixed6(c.metrics.pod) << ','
        << fixed6(c.metrics.far) << ',' << fixed6(c.metrics.r_enp) << ','
        << fixed6(c.metrics.r_wnp) << ',' << int(c.r_enp_defined) << ',' << int(c.r_wnp_defined)
        << ',' << int(on_front[order[k]]) << ',' << int(order[k] == result.selected) << "\n";
  }
  finish(out, table);

  const fs::path summary = dir / "tune_summary.txt";
  auto sout = open_out(summary);
  sout << "candidates " << cands.size() << "\n";
  sout << "frontier " << result.frontier.size() << "\n";
  if (!cands.empty()) {
    const auto& s = cands[result.selected];
    sout << "selected.bbox_size " << shortest(s.bbox_size) << "\n";
    sout << "selected.track_buffer " << s.track_buffer << "\n";
    sout << "selected.match_threshold " << fixed6(s.match_threshold) << "\n";
    sout << "selected.track_threshold " << fixed6(s.track_threshold) << "\n";
    sout << "selected.constraint_set " << tune::to_string(s.constraint_set) << "\n";
    sout << "selected.pod " << fixed6(s.metrics.pod) << "\n";
    sout << "selected.far " << fixed6(s.metrics.far) << "\n";
    sout << "selected.r_enp " << fixed6(s.metrics.r_enp) << "\n";
    sout << "selected.r_wnp " << fixed6(s.metrics.r_wnp) << "\n";
  }
  for (const auto& w : result.warnings) sout << "warning " << w << "\n";
  finish(sout, summary);
}

}  // namespace bytestorm::io

#include "bytestorm/time.hpp"

#include <cstdio>

#include "bytestorm/error.hpp"

namespace bytestorm {

using namespace std::chrono;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::OutOfRange: return "out_of_range";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
    case ErrorKind::UndefinedMetric: return "undefined_metric";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::UnknownCommand: return "unknown_command";
  }
  return "unknown";
}

Timestamp make_time(int year, unsigned month, unsigned day, unsigned hour) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok() || hour > 23) {
    throw Error(ErrorKind::InvalidArgument, "invalid calendar date");
  }
  return sys_days{ymd} + hours{hour};
}

Timestamp parse_iso(std::string_view text) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const std::string buf(text);
  const int n = std::sscanf(buf.c_str(), "%4d-%2u-%2u%c%2u:%2u:%2u%n", &y, &mo, &d,
                            &sep, &h, &mi, &s, &consumed);
  if (n != 7 || (sep != 'T' && sep != ' ')) {
    throw Error(ErrorKind::InvalidArgument, "bad timestamp '" + buf + "'");
  }
  std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
  if (!(rest.empty() || rest == "Z") || mi > 59 || s > 59) {
    throw Error(ErrorKind::InvalidArgument, "bad timestamp '" + buf + "'");
  }
  return make_time(y, mo, d, h) + minutes{mi} + seconds{s};
}

std::string format_iso(Timestamp t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char out[64];
  std::snprintf(out, sizeof out, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return out;
}

int year_of(Timestamp t) {
  return static_cast<int>(year_month_day{floor<days>(t)}.year());
}

unsigned month_of(Timestamp t) {
  return static_cast<unsigned>(year_month_day{floor<days>(t)}.month());
}

unsigned hour_of(Timestamp t) {
  return static_cast<unsigned>(hh_mm_ss{t - floor<days>(t)}.hours().count());
}

bool is_synoptic(Timestamp t) {
  return (t.time_since_epoch() % hours{6}) == seconds{0};
}

std::int64_t steps_between(Timestamp from, Timestamp to) {
  const auto delta = to - from;
  if (delta % kStep != seconds{0}) {
    throw Error(ErrorKind::InvalidArgument,
                "timestamps " + format_iso(from) + " and " + format_iso(to) +
                    " are not on a 6-hourly cadence");
  }
  return delta / kStep;
}

}  // namespace bytestorm

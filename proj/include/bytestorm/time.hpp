#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace bytestorm {

/// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;

inline constexpr std::chrono::hours kStep{6};

/// Accepts "YYYY-MM-DDTHH:MM:SS" or "YYYY-MM-DD HH:MM:SS", optionally
/// followed by 'Z'. Throws Error(InvalidArgument) on anything else.
Timestamp parse_iso(std::string_view text);

/// Always emits "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso(Timestamp t);

Timestamp make_time(int year, unsigned month, unsigned day, unsigned hour = 0);

int year_of(Timestamp t);
unsigned month_of(Timestamp t);
unsigned hour_of(Timestamp t);

/// True at 00, 06, 12 and 18 UTC on the hour.
bool is_synoptic(Timestamp t);

/// Number of whole 6 h steps from `from` to `to`; throws if not a multiple.
std::int64_t steps_between(Timestamp from, Timestamp to);

}  // namespace bytestorm

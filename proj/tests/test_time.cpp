#include "doctest.h"

#include "bytestorm/error.hpp"
#include "bytestorm/time.hpp"

using namespace bytestorm;

TEST_CASE("iso timestamps round trip") {
  const Timestamp t = make_time(1995, 8, 15, 6);
  CHECK(format_iso(t) == "1995-08-15T06:00:00Z");
  CHECK(parse_iso("1995-08-15T06:00:00Z") == t);
  CHECK(parse_iso("1995-08-15 06:00:00") == t);
  CHECK(parse_iso("1995-08-15T06:00:00") == t);
  CHECK(year_of(t) == 1995);
  CHECK(month_of(t) == 8u);
  CHECK(hour_of(t) == 6u);
}

TEST_CASE("malformed timestamps are rejected") {
  for (const char* bad : {"", "1995-08-15", "1995-13-01T00:00:00Z", "1995-02-30T00:00:00Z",
                          "1995-08-15T06:00:00+01", "1995-08-15T06:61:00Z", "garbage"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_iso(bad), Error);
  }
}

TEST_CASE("synoptic hours and step counting") {
  CHECK(is_synoptic(make_time(2000, 1, 1, 18)));
  CHECK_FALSE(is_synoptic(make_time(2000, 1, 1, 3)));
  CHECK_FALSE(is_synoptic(parse_iso("2000-01-01T06:30:00Z")));
  CHECK(steps_between(make_time(2000, 1, 1, 0), make_time(2000, 1, 2, 0)) == 4);
  CHECK(steps_between(make_time(2000, 1, 2, 0), make_time(2000, 1, 1, 0)) == -4);
  CHECK_THROWS_AS(steps_between(make_time(2000, 1, 1, 0), make_time(2000, 1, 1, 3)), Error);
}

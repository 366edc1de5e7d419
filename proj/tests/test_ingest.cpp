#include <sstream>

#include "doctest.h"
#include "mobiscope/ingest.hpp"
#include "mobiscope/timeutil.hpp"

using namespace mobiscope;

namespace {

const char kHeader[] = "user_id,lat,lon,start_epoch_s,end_epoch_s\n";

ParseResult parse_csv(const std::string& body) {
  std::istringstream in(body);
  return parse_fixes(in, FixFormat::csv);
}

GpsFix fix(const std::string& uid, double lat, double lon, int64_t start, int64_t end) {
  return {uid, {lat, lon}, start, end};
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("csv happy path") {
    const ParseResult r = parse_csv(std::string(kHeader) +
                                    "u1,1.3000000,103.8000000,1000,1600\n"
                                    "u2,1.3100000,103.8100000,2000,2600\n");
    REQUIRE(r.fixes.size() == 2);
    CHECK(r.errors.empty());
    CHECK(r.fixes[0].user_id == "u1");
    CHECK(r.fixes[0].point.lat == doctest::Approx(1.3));
    CHECK(r.fixes[1].start_epoch_s == 2000);
  }

  TEST_CASE("csv wants the exact header") {
    CHECK_THROWS_AS(parse_csv("uid,lat,lon,start,end\nu1,1,2,3,4\n"), Error);
    // A completely empty stream is an empty result, not an error.
    const ParseResult r = parse_csv("");
    CHECK(r.fixes.empty());
    CHECK(r.errors.empty());
  }

  TEST_CASE("csv collects malformed rows with line numbers") {
    const ParseResult r = parse_csv(std::string(kHeader) +
                                    "u1,1.3,103.8,1000,1600\n"
                                    "u1,not_a_number,103.8,2000,2600\n"
                                    "u1,1.3,103.8,3000\n"
                                    "u1,1.3,103.8,4000,3000\n"
                                    ",1.3,103.8,5000,5600\n"
                                    "u1,95.0,103.8,6000,6600\n"
                                    "u1,1.3,103.8,7000,7600\n"
                                    "u1,1.3,103.8,8000,8600\n"
                                    "u1,1.3,103.8,9000,9600\n"
                                    "u1,1.3,103.8,9700,9800\n");
    CHECK(r.fixes.size() == 5);
    REQUIRE(r.errors.size() == 5);
    CHECK(r.errors[0].line == 3);
    CHECK(r.errors[1].line == 4);
    CHECK(r.errors[2].line == 5);  // end before start
    CHECK(r.errors[3].line == 6);  // empty user id
    CHECK(r.errors[4].line == 7);  // latitude out of range
  }

  TEST_CASE("csv rejects a stream that is mostly garbage") {
    CHECK_THROWS_AS(parse_csv(std::string(kHeader) +
                              "u1,1.3,103.8,1000,1600\n"
                              "x\n"
                              "y\n"),
                    Error);
  }

  TEST_CASE("jsonl happy path and typed timestamps") {
    std::istringstream in(
        R"({"user_id":"u1","lat":1.3,"lon":103.8,"start_epoch_s":1000,"end_epoch_s":1600})"
        "\n"
        R"({"user_id":"u1","lat":1.3,"lon":103.8,"start_epoch_s":2000.5,"end_epoch_s":2600})"
        "\n");
    const ParseResult r = parse_fixes(in, FixFormat::jsonl);
    CHECK(r.fixes.size() == 1);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].line == 2);  // fractional timestamp
  }

  TEST_CASE("serialize then parse round-trips") {
    const std::vector<GpsFix> fixes{fix("u1", 1.3456789, 103.8123456, 1000, 1600),
                                    fix("u2", -1.25, -103.5, -50, 0)};
    const ParseResult r = parse_csv(serialize_fixes_csv(fixes));
    REQUIRE(r.fixes.size() == 2);
    CHECK(r.errors.empty());
    CHECK(r.fixes[0].point.lat == doctest::Approx(1.3456789).epsilon(1e-12));
    CHECK(r.fixes[1].start_epoch_s == -50);
  }

  TEST_CASE("group_users sorts and drops overlaps") {
    std::vector<GpsFix> fixes{fix("b", 1.3, 103.8, 3000, 3600),
                              fix("a", 1.3, 103.8, 2000, 2600),
                              fix("a", 1.3, 103.8, 1000, 1600),
                              fix("a", 1.3, 103.8, 2500, 2900),   // overlaps 2000-2600
                              fix("a", 1.3, 103.8, 2600, 3200)};  // touching is fine
    const auto users = group_users(std::move(fixes));
    REQUIRE(users.size() == 2);
    CHECK(users[0].user_id == "a");
    REQUIRE(users[0].fixes.size() == 3);
    CHECK(users[0].fixes[0].start_epoch_s == 1000);
    CHECK(users[0].fixes[1].start_epoch_s == 2000);
    CHECK(users[0].fixes[2].start_epoch_s == 2600);
    CHECK(users[1].user_id == "b");
  }

  TEST_CASE("group_users overlap tolerance") {
    std::vector<GpsFix> fixes{fix("a", 1.3, 103.8, 1000, 1600),
                              fix("a", 1.3, 103.8, 1550, 2000)};
    CHECK(group_users(fixes, 0)[0].fixes.size() == 1);
    CHECK(group_users(fixes, 60)[0].fixes.size() == 2);
  }

  TEST_CASE("validity_filter counts covered days") {
    // Two days fully covered by 9 h blocks, a third day with only 2 h.
    const int tz = 0;
    const int64_t d0 = 0;  // epoch day boundary at tz 0
    std::vector<GpsFix> fixes;
    fixes.push_back(fix("a", 1.3, 103.8, d0 + 3600, d0 + 3600 + 9 * 3600));
    fixes.push_back(
        fix("a", 1.3, 103.8, d0 + kSecondsPerDay + 3600, d0 + kSecondsPerDay + 3600 + 9 * 3600));
    fixes.push_back(fix("a", 1.3, 103.8, d0 + 2 * kSecondsPerDay + 3600,
                        d0 + 2 * kSecondsPerDay + 3600 + 2 * 3600));
    const UserDataset ds{"a", fixes};
    const ValidityReport r = validity_filter(ds, {2, 0.5, 8.0, tz});
    CHECK(r.recording_days == 3);
    CHECK(r.valid_days == 2);
    CHECK(r.coverage_ratio == doctest::Approx(2.0 / 3.0));
    CHECK(r.accepted);
    CHECK_FALSE(validity_filter(ds, {3, 0.5, 8.0, tz}).accepted);
    CHECK_FALSE(validity_filter(ds, {2, 0.7, 8.0, tz}).accepted);
  }

  TEST_CASE("validity_filter merges overlapping intervals within a day") {
    // Two 5 h blocks overlapping by 2 h: union is 8 h, exactly the bar.
    const UserDataset ds{"a",
                         {fix("a", 1.3, 103.8, 0, 5 * 3600),
                          fix("a", 1.3, 103.8, 3 * 3600, 8 * 3600)}};
    CHECK(validity_filter(ds, {1, 0.0, 8.0, 0}).valid_days == 1);
    CHECK(validity_filter(ds, {1, 0.0, 8.5, 0}).valid_days == 0);
  }

  TEST_CASE("instant fixes cover nothing") {
    const UserDataset ds{"a", {fix("a", 1.3, 103.8, 1000, 1000)}};
    const ValidityReport r = validity_filter(ds, {0, 0.0, 0.5, 0});
    CHECK(r.recording_days == 1);
    CHECK(r.valid_days == 0);
  }

  TEST_CASE("an interval ending at midnight stays on its own day") {
    // Covers exactly day 0; recording_days must be 1, not 2.
    const UserDataset ds{"a", {fix("a", 1.3, 103.8, 0, kSecondsPerDay)}};
    const ValidityReport r = validity_filter(ds, {1, 0.5, 8.0, 0});
    CHECK(r.recording_days == 1);
    CHECK(r.valid_days == 1);
    CHECK(r.accepted);
  }

  TEST_CASE("a fix spanning midnight credits both days") {
    const UserDataset ds{
        "a", {fix("a", 1.3, 103.8, kSecondsPerDay - 4 * 3600, kSecondsPerDay + 4 * 3600)}};
    const ValidityReport r = validity_filter(ds, {1, 0.0, 3.5, 0});
    CHECK(r.recording_days == 2);
    CHECK(r.valid_days == 2);
  }
}

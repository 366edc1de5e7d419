#include <cmath>

#include "doctest.h"
#include "mobiscope/poi.hpp"
#include "mobiscope/timeutil.hpp"

using namespace mobiscope;

namespace {

// 1970-01-05 was a Monday; with tz 0 its local day index is 4.
constexpr int64_t kMonday = 4;

GpsFix at(double lat, double lon, int64_t start, int64_t end) {
  return {"u", {lat, lon}, start, end};
}

// Fixes every 5 minutes at a point, ends touching the next start.
std::vector<GpsFix> dwell(double lat, double lon, int64_t start, int count) {
  std::vector<GpsFix> fixes;
  for (int i = 0; i < count; ++i) {
    fixes.push_back(at(lat, lon, start + i * 300, start + i * 300 + 300));
  }
  return fixes;
}

Poi poi(int id, double lat, double lon) { return {id, {lat, lon}, std::nullopt, std::nullopt, 1}; }

constexpr double kDegPerKmLat = 1.0 / 111.19492664455873;

}  // namespace

TEST_SUITE("poi") {
  TEST_CASE("a 30 minute dwell is one stay point") {
    const auto stays = detect_stay_points(dwell(1.30, 103.80, 0, 6));
    REQUIRE(stays.size() == 1);
    CHECK(stays[0].arrival == 0);
    CHECK(stays[0].departure == 1800);
    CHECK(stays[0].fix_count == 6);
    CHECK(stays[0].centroid.lat == doctest::Approx(1.30).epsilon(1e-12));
  }

  TEST_CASE("a 15 minute dwell is too short") {
    CHECK(detect_stay_points(dwell(1.30, 103.80, 0, 3)).empty());
  }

  TEST_CASE("one long fix can carry a stay by itself") {
    const auto stays = detect_stay_points({at(1.30, 103.80, 0, 1800)});
    REQUIRE(stays.size() == 1);
    CHECK(stays[0].fix_count == 1);
  }

  TEST_CASE("a distant fix breaks the run") {
    // 25 min at home, 5 min a kilometer away, 30 min at home again. The gap
    // equals the merge threshold, so the two home stays stay separate.
    std::vector<GpsFix> fixes = dwell(1.30, 103.80, 0, 5);
    fixes.push_back(at(1.30 + kDegPerKmLat, 103.80, 1500, 1800));
    const auto back = dwell(1.30, 103.80, 1800, 6);
    fixes.insert(fixes.end(), back.begin(), back.end());
    const auto stays = detect_stay_points(fixes);
    REQUIRE(stays.size() == 2);
    CHECK(stays[0].departure == 1500);
    CHECK(stays[1].arrival == 1800);
  }

  TEST_CASE("stays separated by under the gap threshold merge") {
    // Same shape, but the return happens 4 minutes after the first departure.
    std::vector<GpsFix> fixes = dwell(1.30, 103.80, 0, 5);
    fixes.push_back(at(1.30 + kDegPerKmLat, 103.80, 1500, 1700));
    const auto back = dwell(1.30, 103.80, 1740, 6);
    fixes.insert(fixes.end(), back.begin(), back.end());
    const auto stays = detect_stay_points(fixes);
    REQUIRE(stays.size() == 1);
    CHECK(stays[0].arrival == 0);
    CHECK(stays[0].departure == 3540);
    CHECK(stays[0].fix_count == 11);
  }

  TEST_CASE("stay detection rejects unsorted fixes and bad params") {
    CHECK_THROWS_AS(detect_stay_points({at(1.3, 103.8, 600, 900), at(1.3, 103.8, 0, 300)}),
                    Error);
    CHECK_THROWS_AS(detect_stay_points(dwell(1.3, 103.8, 0, 6), {0.0, 20.0, 5.0}), Error);
  }

  TEST_CASE("merge_to_pois groups nearby stays and keeps visit order") {
    const double off = 0.0009;  // ~100 m in latitude
    std::vector<StayPoint> stays{
        {{1.3000, 103.80}, 0, 1800, 1},
        {{1.3000 + 0.0004, 103.80}, 2000, 3800, 1},  // ~44 m from the first
        {{1.3000 + 10 * off, 103.80}, 4000, 5800, 1},
    };
    const PoiResult r = merge_to_pois(stays, 100.0);
    REQUIRE(r.pois.size() == 2);
    CHECK(r.pois[0].poi_id == 0);
    CHECK(r.pois[0].stay_count == 2);
    // Unweighted mean of the two member stay centroids.
    CHECK(r.pois[0].centroid.lat == doctest::Approx(1.3000 + 0.0002).epsilon(1e-12));
    CHECK(r.pois[1].stay_count == 1);
    REQUIRE(r.visits.size() == 3);
    CHECK(r.visits[0].poi_id == 0);
    CHECK(r.visits[1].poi_id == 0);
    CHECK(r.visits[2].poi_id == 1);
    CHECK(r.visits[1].arrival == 2000);
  }

  TEST_CASE("a stay joins the nearest POI, ties to the smaller id") {
    // Two POIs 180 m apart; a stay 80 m from the first joins it even though
    // the second is also within range.
    const double m180 = 0.18 * kDegPerKmLat;
    const double m80 = 0.08 * kDegPerKmLat;
    std::vector<StayPoint> stays{
        {{1.30, 103.80}, 0, 1800, 1},
        {{1.30 + m180, 103.80}, 2000, 3800, 1},
        {{1.30 + m80, 103.80}, 4000, 5800, 1},
    };
    PoiResult r = merge_to_pois(stays, 100.0);
    REQUIRE(r.pois.size() == 2);
    CHECK(r.visits[2].poi_id == 0);

    // Exactly halfway, both candidates at the same distance: smaller id wins.
    // Powers of two keep every latitude difference exact, so the two computed
    // distances are bit-identical (2^-11 deg is about 54 m).
    const double step = 0.00048828125;
    stays[1].centroid = {1.25 + 2.0 * step, 103.80};
    stays[2].centroid = {1.25 + step, 103.80};
    stays[0].centroid = {1.25, 103.80};
    r = merge_to_pois(stays, 100.0);
    REQUIRE(r.pois.size() == 2);
    CHECK(r.visits[2].poi_id == 0);
  }

  TEST_CASE("home and work detection on a simple week") {
    const std::vector<Poi> pois{poi(0, 1.30, 103.80), poi(1, 1.35, 103.85),
                                poi(2, 1.31, 103.81)};
    std::vector<Visit> visits;
    for (int64_t d = kMonday; d < kMonday + 5; ++d) {
      const int64_t s = d * kSecondsPerDay;
      visits.push_back({0, s, s + 6 * 3600});  // night at home
      if (d < kMonday + 3) {
        visits.push_back({1, s + 10 * 3600, s + 17 * 3600});  // office Mon-Wed
        visits.push_back({2, s + 18 * 3600, s + 19 * 3600});  // park in the evening
      } else {
        visits.push_back({0, s + 8 * 3600, s + 22 * 3600});  // home the rest
      }
    }
    const UserProfile p = detect_home_work("u", pois, visits, {0, 6, 10, 17, 0.4, 0});
    CHECK(p.home_poi == 0);
    CHECK_FALSE(p.home_fallback);
    REQUIRE(p.work_poi.has_value());
    CHECK(*p.work_poi == 1);
    CHECK(*p.home_work_km == doctest::Approx(haversine_km({1.30, 103.80}, {1.35, 103.85})));

    const auto days = segment_days(visits, p, 0);
    REQUIRE(days.size() == 5);
    CHECK(days[0].day_type == DayType::Workday);
    CHECK(days[2].day_type == DayType::Workday);
    CHECK(days[3].day_type == DayType::Offday);
    CHECK(days[4].day_type == DayType::Offday);
  }

  TEST_CASE("work needs presence on enough recorded weekdays") {
    const std::vector<Poi> pois{poi(0, 1.30, 103.80), poi(1, 1.35, 103.85)};
    std::vector<Visit> visits;
    for (int64_t d = kMonday; d < kMonday + 5; ++d) {
      const int64_t s = d * kSecondsPerDay;
      visits.push_back({0, s, s + 6 * 3600});
      visits.push_back({0, s + 18 * 3600, s + 23 * 3600});
    }
    // Office on one of five recorded weekdays: 0.2 < 0.4.
    visits.push_back({1, kMonday * kSecondsPerDay + 10 * 3600,
                      kMonday * kSecondsPerDay + 17 * 3600});
    const UserProfile p = detect_home_work("u", pois, visits, {0, 6, 10, 17, 0.4, 0});
    CHECK(p.home_poi == 0);
    CHECK_FALSE(p.work_poi.has_value());
    CHECK_FALSE(p.home_work_km.has_value());
  }

  TEST_CASE("weekend office hours never make a work POI") {
    const std::vector<Poi> pois{poi(0, 1.30, 103.80), poi(1, 1.35, 103.85)};
    std::vector<Visit> visits;
    for (int64_t d = kMonday + 5; d < kMonday + 7; ++d) {  // Saturday, Sunday
      const int64_t s = d * kSecondsPerDay;
      visits.push_back({0, s, s + 6 * 3600});
      visits.push_back({1, s + 10 * 3600, s + 17 * 3600});
    }
    const UserProfile p = detect_home_work("u", pois, visits, {0, 6, 10, 17, 0.4, 0});
    CHECK_FALSE(p.work_poi.has_value());
  }

  TEST_CASE("night dwell ties break to the larger total dwell") {
    const std::vector<Poi> pois{poi(0, 1.30, 103.80), poi(1, 1.35, 103.85)};
    const int64_t s = kMonday * kSecondsPerDay;
    const std::vector<Visit> visits{
        {0, s, s + 2 * 3600},
        {1, s + 2 * 3600, s + 4 * 3600},
        {1, s + 8 * 3600, s + 12 * 3600},
    };
    const UserProfile p = detect_home_work("u", pois, visits, {0, 6, 10, 17, 0.4, 0});
    CHECK(p.home_poi == 1);
  }

  TEST_CASE("no night dwell falls back to total dwell with a flag") {
    const std::vector<Poi> pois{poi(0, 1.30, 103.80), poi(1, 1.35, 103.85)};
    const int64_t s = kMonday * kSecondsPerDay;
    const std::vector<Visit> visits{
        {0, s + 8 * 3600, s + 10 * 3600},
        {1, s + 10 * 3600, s + 20 * 3600},
    };
    const UserProfile p = detect_home_work("u", pois, visits, {0, 6, 10, 17, 0.4, 0});
    CHECK(p.home_poi == 1);
    CHECK(p.home_fallback);
  }

  TEST_CASE("the home POI is never the work POI") {
    // One POI holds both the night and the office hours.
    const std::vector<Poi> pois{poi(0, 1.30, 103.80)};
    std::vector<Visit> visits;
    for (int64_t d = kMonday; d < kMonday + 5; ++d) {
      const int64_t s = d * kSecondsPerDay;
      visits.push_back({0, s, s + 23 * 3600});
    }
    const UserProfile p = detect_home_work("u", pois, visits, {0, 6, 10, 17, 0.4, 0});
    CHECK(p.home_poi == 0);
    CHECK_FALSE(p.work_poi.has_value());
  }

  TEST_CASE("segment_days buckets by arrival date") {
    UserProfile p;
    p.user_id = "u";
    p.home_poi = 0;
    const int64_t s = kMonday * kSecondsPerDay;
    // An overnight visit belongs to the day it started.
    const std::vector<Visit> visits{
        {0, s + 20 * 3600, s + 30 * 3600},
        {1, s + kSecondsPerDay + 10 * 3600, s + kSecondsPerDay + 11 * 3600},
    };
    const auto days = segment_days(visits, p, 0);
    REQUIRE(days.size() == 2);
    CHECK(days[0].date == kMonday);
    CHECK(days[0].visits.size() == 1);
    CHECK(days[1].date == kMonday + 1);
    CHECK(days[0].day_type == DayType::Offday);  // no work POI at all
  }
}

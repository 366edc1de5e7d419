#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mobiscope/categories.hpp"
#include "mobiscope/ingest.hpp"

namespace mobiscope {

struct StayPoint {
  GeoPoint centroid;
  int64_t arrival = 0;
  int64_t departure = 0;
  int fix_count = 0;
};

struct StayParams {
  double dist_m = 200.0;
  double time_min = 20.0;
  double gap_min = 5.0;
};

// Anchor-run scan: a stay is a maximal run of consecutive fixes within dist_m
// of the run's first fix whose total span reaches time_min. Stays separated by
// less than gap_min and within dist_m of each other are merged afterwards.
std::vector<StayPoint> detect_stay_points(const std::vector<GpsFix>& fixes,
                                          const StayParams& params = {});

struct Poi {
  int poi_id = -1;  // equals its index in the per-user POI vector
  GeoPoint centroid;
  std::optional<std::string> subzone;
  std::optional<PoiCategory> category;
  int stay_count = 0;
};

struct Visit {
  int poi_id = -1;
  int64_t arrival = 0;
  int64_t departure = 0;
};

struct PoiResult {
  std::vector<Poi> pois;
  std::vector<Visit> visits;  // one per stay point, in time order
};

// Greedy agglomeration in time order: each stay joins the nearest existing POI
// within merge_m (ties to the smaller poi_id) or founds a new one.
PoiResult merge_to_pois(const std::vector<StayPoint>& stays, double merge_m = 100.0);

struct HomeWorkParams {
  int home_window_start_h = 0;
  int home_window_end_h = 6;
  int work_window_start_h = 10;
  int work_window_end_h = 17;
  double work_presence_ratio = 0.4;
  int tz_offset_minutes = 480;
};

struct UserProfile {
  std::string user_id;
  int home_poi = -1;
  std::optional<int> work_poi;
  std::optional<double> home_work_km;
  // Set when no POI had any dwell in the nighttime window and home fell back
  // to the POI with the largest total dwell.
  bool home_fallback = false;

  bool working() const { return work_poi.has_value(); }
};

UserProfile detect_home_work(const std::string& user_id, const std::vector<Poi>& pois,
                             const std::vector<Visit>& visits,
                             const HomeWorkParams& params = {});

enum class DayType { Workday, Offday };

inline const char* to_string(DayType t) { return t == DayType::Workday ? "Workday" : "Offday"; }

struct DayRecord {
  int64_t date = 0;  // local day index
  DayType day_type = DayType::Offday;
  std::vector<Visit> visits;  // every visit whose arrival falls on this date
};

// Buckets visits into local calendar days by arrival time. A date is a Workday
// iff the user has a work POI and visited it that date; users without a work
// POI get only Offdays.
std::vector<DayRecord> segment_days(const std::vector<Visit>& visits,
                                    const UserProfile& profile, int tz_offset_minutes);

}  // namespace mobiscope

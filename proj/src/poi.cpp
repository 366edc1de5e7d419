#include "mobiscope/poi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "mobiscope/timeutil.hpp"

namespace mobiscope {

std::vector<StayPoint> detect_stay_points(const std::vector<GpsFix>& fixes,
                                          const StayParams& params) {
  if (params.dist_m <= 0 || params.time_min <= 0 || params.gap_min < 0) {
    fail(errc::parameter, "detect_stay_points: thresholds must be positive");
  }
  for (size_t i = 1; i < fixes.size(); ++i) {
    if (fixes[i].start_epoch_s < fixes[i - 1].start_epoch_s) {
      fail(errc::precondition, "detect_stay_points: fixes not sorted by start time");
    }
  }

  std::vector<StayPoint> stays;
  const double dist_km = params.dist_m / 1000.0;
  const int64_t min_span_s = static_cast<int64_t>(params.time_min * 60.0);
  size_t i = 0;
  const size_t n = fixes.size();
  while (i < n) {
    const GeoPoint& anchor = fixes[i].point;
    double sum_lat = anchor.lat, sum_lon = anchor.lon;
    size_t j = i + 1;
    while (j < n && haversine_km(fixes[j].point, anchor) <= dist_km) {
      sum_lat += fixes[j].point.lat;
      sum_lon += fixes[j].point.lon;
      ++j;
    }
    const int64_t span = fixes[j - 1].end_epoch_s - fixes[i].start_epoch_s;
    if (span >= min_span_s) {
      const double cnt = static_cast<double>(j - i);
      stays.push_back({{sum_lat / cnt, sum_lon / cnt},
                       fixes[i].start_epoch_s,
                       fixes[j - 1].end_epoch_s,
                       static_cast<int>(j - i)});
      i = j;
    } else {
      ++i;
    }
  }

  // Merge stays split by a short gap (signal dropouts) when they stayed put.
  std::vector<StayPoint> merged;
  const int64_t gap_s = static_cast<int64_t>(params.gap_min * 60.0);
  for (const StayPoint& sp : stays) {
    if (!merged.empty()) {
      StayPoint& prev = merged.back();
      if (sp.arrival - prev.departure < gap_s &&
          haversine_km(sp.centroid, prev.centroid) <= dist_km) {
        const double n1 = prev.fix_count, n2 = sp.fix_count;
        prev.centroid.lat = (prev.centroid.lat * n1 + sp.centroid.lat * n2) / (n1 + n2);
        prev.centroid.lon = (prev.centroid.lon * n1 + sp.centroid.lon * n2) / (n1 + n2);
        prev.departure = sp.departure;
        prev.fix_count += sp.fix_count;
        continue;
      }
    }
    merged.push_back(sp);
  }
  return merged;
}

PoiResult merge_to_pois(const std::vector<StayPoint>& stays, double merge_m) {
  if (merge_m <= 0) fail(errc::parameter, "merge_to_pois: merge_m must be positive");
  PoiResult result;
  const double merge_km = merge_m / 1000.0;
  std::vector<double> sum_lat, sum_lon;
  for (const StayPoint& sp : stays) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t p = 0; p < result.pois.size(); ++p) {
      const double d = haversine_km(sp.centroid, result.pois[p].centroid);
      if (d <= merge_km && d < best_d) {
        best_d = d;
        best = static_cast<int>(p);
      }
    }
    if (best < 0) {
      best = static_cast<int>(result.pois.size());
      result.pois.push_back({best, sp.centroid, std::nullopt, std::nullopt, 0});
      sum_lat.push_back(0.0);
      sum_lon.push_back(0.0);
    }
    Poi& poi = result.pois[static_cast<size_t>(best)];
    sum_lat[static_cast<size_t>(best)] += sp.centroid.lat;
    sum_lon[static_cast<size_t>(best)] += sp.centroid.lon;
    poi.stay_count += 1;
    poi.centroid.lat = sum_lat[static_cast<size_t>(best)] / poi.stay_count;
    poi.centroid.lon = sum_lon[static_cast<size_t>(best)] / poi.stay_count;
    result.visits.push_back({best, sp.arrival, sp.departure});
  }
  return result;
}

namespace {

// Seconds of [a, b) falling inside the window [start_h, end_h) on each local
// day, accumulated per day into out.
void window_overlap_by_day(int64_t a, int64_t b, int start_h, int end_h, int tz_minutes,
                           std::map<int64_t, int64_t>& out) {
  if (b <= a) return;
  int64_t first = local_day(a, tz_minutes);
  int64_t last = local_day(b - 1, tz_minutes);
  for (int64_t d = first; d <= last; ++d) {
    const int64_t day_start = day_start_epoch(d, tz_minutes);
    const int64_t lo = std::max(a, day_start + static_cast<int64_t>(start_h) * 3600);
    const int64_t hi = std::min(b, day_start + static_cast<int64_t>(end_h) * 3600);
    if (hi > lo) out[d] += hi - lo;
  }
}

}  // namespace

UserProfile detect_home_work(const std::string& user_id, const std::vector<Poi>& pois,
                             const std::vector<Visit>& visits, const HomeWorkParams& params) {
  if (pois.empty()) fail(errc::precondition, "detect_home_work: user has no POIs");
  if (params.work_presence_ratio < 0.0 || params.work_presence_ratio > 1.0) {
    fail(errc::parameter, "detect_home_work: presence ratio out of [0,1]");
  }
  const int tz = params.tz_offset_minutes;

  std::vector<int64_t> night_dwell(pois.size(), 0);
  std::vector<int64_t> total_dwell(pois.size(), 0);
  std::vector<int64_t> work_dwell(pois.size(), 0);
  // Weekday dates each POI was present in the work window, and all weekday
  // dates with any recorded dwell at all.
  std::vector<std::set<int64_t>> work_presence(pois.size());
  std::set<int64_t> recorded_weekdays;

  for (const Visit& v : visits) {
    if (v.poi_id < 0 || static_cast<size_t>(v.poi_id) >= pois.size()) {
      fail(errc::precondition, "detect_home_work: visit references unknown POI");
    }
    total_dwell[static_cast<size_t>(v.poi_id)] += v.departure - v.arrival;

    std::map<int64_t, int64_t> night;
    window_overlap_by_day(v.arrival, v.departure, params.home_window_start_h,
                          params.home_window_end_h, tz, night);
    for (auto [day, secs] : night) night_dwell[static_cast<size_t>(v.poi_id)] += secs;

    std::map<int64_t, int64_t> work;
    window_overlap_by_day(v.arrival, v.departure, params.work_window_start_h,
                          params.work_window_end_h, tz, work);
    for (auto [day, secs] : work) {
      if (!is_weekend(day) && secs > 0) {
        work_presence[static_cast<size_t>(v.poi_id)].insert(day);
        work_dwell[static_cast<size_t>(v.poi_id)] += secs;
      }
    }

    std::map<int64_t, int64_t> any;
    window_overlap_by_day(v.arrival, v.departure, 0, 24, tz, any);
    for (auto [day, secs] : any) {
      if (!is_weekend(day) && secs > 0) recorded_weekdays.insert(day);
    }
  }

  UserProfile profile;
  profile.user_id = user_id;

  int home = 0;
  bool any_night = false;
  for (size_t p = 0; p < pois.size(); ++p) {
    if (night_dwell[p] > 0) any_night = true;
  }
  if (any_night) {
    for (size_t p = 1; p < pois.size(); ++p) {
      if (night_dwell[p] > night_dwell[static_cast<size_t>(home)]) {
        home = static_cast<int>(p);
      } else if (night_dwell[p] == night_dwell[static_cast<size_t>(home)] &&
                 total_dwell[p] > total_dwell[static_cast<size_t>(home)]) {
        home = static_cast<int>(p);
      }
    }
  } else {
    for (size_t p = 1; p < pois.size(); ++p) {
      if (total_dwell[p] > total_dwell[static_cast<size_t>(home)]) home = static_cast<int>(p);
    }
    profile.home_fallback = true;
  }
  profile.home_poi = home;

  if (!recorded_weekdays.empty()) {
    const double n_weekdays = static_cast<double>(recorded_weekdays.size());
    int best = -1;
    for (size_t p = 0; p < pois.size(); ++p) {
      if (static_cast<int>(p) == home) continue;
      const double presence = static_cast<double>(work_presence[p].size()) / n_weekdays;
      if (presence < params.work_presence_ratio) continue;
      if (work_dwell[p] == 0) continue;
      if (best < 0 || work_dwell[p] > work_dwell[static_cast<size_t>(best)]) {
        best = static_cast<int>(p);
      }
    }
    if (best >= 0) {
      profile.work_poi = best;
      profile.home_work_km = haversine_km(pois[static_cast<size_t>(home)].centroid,
                                          pois[static_cast<size_t>(best)].centroid);
    }
  }
  return profile;
}

std::vector<DayRecord> segment_days(const std::vector<Visit>& visits,
                                    const UserProfile& profile, int tz_offset_minutes) {
  std::map<int64_t, std::vector<Visit>> by_day;
  for (const Visit& v : visits) {
    by_day[local_day(v.arrival, tz_offset_minutes)].push_back(v);
  }
  std::vector<DayRecord> days;
  days.reserve(by_day.size());
  for (auto& [date, day_visits] : by_day) {
    std::stable_sort(day_visits.begin(), day_visits.end(),
                     [](const Visit& a, const Visit& b) { return a.arrival < b.arrival; });
    DayType type = DayType::Offday;
    if (profile.work_poi) {
      for (const Visit& v : day_visits) {
        if (v.poi_id == *profile.work_poi) {
          type = DayType::Workday;
          break;
        }
      }
    }
    days.push_back({date, type, std::move(day_visits)});
  }
  return days;
}

}  // namespace mobiscope

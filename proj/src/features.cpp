#include "mobiscope/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace mobiscope {

ThresholdScheme ThresholdScheme::dcd(DayType day_type, std::vector<double> edges) {
  ThresholdScheme s;
  s.context = day_type == DayType::Workday ? SchemeContext::DcdWorkday
                                           : SchemeContext::DcdOffday;
  s.edges_km = std::move(edges);
  s.validate();
  return s;
}

ThresholdScheme ThresholdScheme::od(DayType day_type, std::vector<double> edges) {
  ThresholdScheme s;
  if (day_type == DayType::Workday) {
    s.context = SchemeContext::OdWorkday;
    s.edges_km = edges.empty() ? std::vector<double>{2.0, 8.0} : std::move(edges);
  } else {
    s.context = SchemeContext::OdOffday;
    s.edges_km = edges.empty() ? std::vector<double>{1.0, 5.0, 15.0} : std::move(edges);
  }
  s.validate();
  return s;
}

void ThresholdScheme::validate() const {
  const size_t want = context == SchemeContext::OdOffday ? 3 : 2;
  if (edges_km.size() != want) {
    fail(errc::parameter, "threshold scheme needs " + std::to_string(want) + " edges, got " +
                              std::to_string(edges_km.size()));
  }
  double prev = 0.0;
  for (double e : edges_km) {
    if (!std::isfinite(e) || e <= prev) {
      fail(errc::parameter, "threshold edges must be positive and strictly ascending");
    }
    prev = e;
  }
}

int ThresholdScheme::distance_bin(double km) const {
  if (!std::isfinite(km) || km < 0) fail(errc::invalid_input, "distance_bin: bad distance");
  switch (context) {
    case SchemeContext::OdWorkday:
      // Bin 0 is the home/work identity bin, decided by the caller.
      if (km <= edges_km[0]) return 1;
      if (km <= edges_km[1]) return 2;
      return 3;
    case SchemeContext::OdOffday:
      if (km <= edges_km[0]) return 0;
      if (km <= edges_km[1]) return 1;
      if (km <= edges_km[2]) return 2;
      return 3;
    default:
      fail(errc::precondition, "distance_bin: not an OD scheme");
  }
}

int ThresholdScheme::dcd_bin(double km, double zero_snap_m) const {
  if (context != SchemeContext::DcdWorkday && context != SchemeContext::DcdOffday) {
    fail(errc::precondition, "dcd_bin: not a DCD scheme");
  }
  if (!std::isfinite(km) || km < 0) fail(errc::invalid_input, "dcd_bin: bad distance");
  if (km * 1000.0 < zero_snap_m) return 0;
  if (km <= edges_km[0]) return 1;
  if (km <= edges_km[1]) return 2;
  return 3;
}

std::string ThresholdScheme::bin_label(int bin) const {
  if (bin < 0 || bin >= kBins) fail(errc::parameter, "bin_label: bin out of range");
  char buf[48];
  auto fmt = [](double v) {
    char b[24];
    if (v == static_cast<int64_t>(v)) {
      std::snprintf(b, sizeof(b), "%lld", static_cast<long long>(v));
    } else {
      std::snprintf(b, sizeof(b), "%g", v);
    }
    return std::string(b);
  };
  switch (context) {
    case SchemeContext::DcdWorkday:
    case SchemeContext::DcdOffday:
      if (bin == 0) return "0km";
      if (bin == 1) return "0-" + fmt(edges_km[0]) + "km";
      if (bin == 2) return fmt(edges_km[0]) + "-" + fmt(edges_km[1]) + "km";
      return ">" + fmt(edges_km[1]) + "km";
    case SchemeContext::OdWorkday:
      if (bin == 0) return "HomeWork";
      if (bin == 1) return "0-" + fmt(edges_km[0]) + "km";
      if (bin == 2) return fmt(edges_km[0]) + "-" + fmt(edges_km[1]) + "km";
      return ">" + fmt(edges_km[1]) + "km";
    case SchemeContext::OdOffday:
      if (bin == 0) return "0-" + fmt(edges_km[0]) + "km";
      if (bin == 1) return fmt(edges_km[0]) + "-" + fmt(edges_km[1]) + "km";
      if (bin == 2) return fmt(edges_km[1]) + "-" + fmt(edges_km[2]) + "km";
      return ">" + fmt(edges_km[2]) + "km";
  }
  fail(errc::parameter, "bin_label: unknown context");
}

double radius_of_gyration(const std::vector<GeoPoint>& positions) {
  if (positions.empty()) fail(errc::empty_input, "radius_of_gyration: no positions");
  const GeoPoint center = mean_coordinate(positions);
  double sum_sq = 0.0;
  for (const GeoPoint& p : positions) {
    const double d = haversine_km(p, center);
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / static_cast<double>(positions.size()));
}

namespace {

const Poi& poi_by_id(const std::vector<Poi>& pois, int id, const char* who) {
  if (id < 0 || static_cast<size_t>(id) >= pois.size() || pois[static_cast<size_t>(id)].poi_id != id) {
    fail(errc::precondition, std::string(who) + ": POI id " + std::to_string(id) +
                                 " not present");
  }
  return pois[static_cast<size_t>(id)];
}

}  // namespace

double daily_characteristic_distance(const DayRecord& day, const UserProfile& profile,
                                     const std::vector<Poi>& pois) {
  const Poi& home = poi_by_id(pois, profile.home_poi, "daily_characteristic_distance");
  std::map<int, int> visit_counts;
  for (const Visit& v : day.visits) {
    if (v.poi_id == profile.home_poi) continue;
    if (profile.work_poi && v.poi_id == *profile.work_poi) continue;
    poi_by_id(pois, v.poi_id, "daily_characteristic_distance");
    visit_counts[v.poi_id] += 1;
  }
  if (visit_counts.empty()) return 0.0;
  double sum = 0.0;
  for (auto [poi_id, count] : visit_counts) {
    const double d = haversine_km(pois[static_cast<size_t>(poi_id)].centroid, home.centroid);
    sum += static_cast<double>(count) * d * d;
  }
  return std::sqrt(sum / static_cast<double>(visit_counts.size()));
}

DcdSeries dcd_series(const std::vector<DayRecord>& days, const UserProfile& profile,
                     const std::vector<Poi>& pois, DayType day_type) {
  DcdSeries series;
  series.day_type = day_type;
  for (const DayRecord& day : days) {
    if (day.day_type != day_type) continue;
    series.values.emplace_back(day.date, daily_characteristic_distance(day, profile, pois));
  }
  return series;
}

DcdFeatures dcd_features(const DcdSeries& series, const ThresholdScheme& scheme,
                         double zero_snap_m) {
  scheme.validate();
  if (scheme.context != SchemeContext::DcdWorkday &&
      scheme.context != SchemeContext::DcdOffday) {
    fail(errc::parameter, "dcd_features: scheme is not a DCD scheme");
  }
  if (series.values.empty()) fail(errc::empty_input, "dcd_features: empty series");
  DcdFeatures out;
  for (const auto& [date, km] : series.values) {
    out.shares[static_cast<size_t>(scheme.dcd_bin(km, zero_snap_m))] += 1.0;
  }
  const double n = static_cast<double>(series.values.size());
  for (double& s : out.shares) s /= n;
  return out;
}

double min_distance(const Poi& poi, const UserProfile& profile, const std::vector<Poi>& pois,
                    DayType day_type) {
  const Poi& home = poi_by_id(pois, profile.home_poi, "min_distance");
  if (poi.poi_id == profile.home_poi) return 0.0;
  if (day_type == DayType::Workday) {
    if (!profile.work_poi) {
      fail(errc::precondition, "min_distance: Workday for a user without a work POI");
    }
    if (poi.poi_id == *profile.work_poi) return 0.0;
    const Poi& work = poi_by_id(pois, *profile.work_poi, "min_distance");
    return std::min(haversine_km(poi.centroid, home.centroid),
                    haversine_km(poi.centroid, work.centroid));
  }
  // Offday distances are anchored to home only, whatever the POI is.
  return haversine_km(poi.centroid, home.centroid);
}

std::vector<Trip> extract_trips(const std::vector<DayRecord>& days,
                                const std::vector<Poi>& pois) {
  std::vector<Trip> trips;
  for (const DayRecord& day : days) {
    for (size_t i = 0; i + 1 < day.visits.size(); ++i) {
      const Poi& o = poi_by_id(pois, day.visits[i].poi_id, "extract_trips");
      const Poi& d = poi_by_id(pois, day.visits[i + 1].poi_id, "extract_trips");
      if (o.subzone && d.subzone && *o.subzone == *d.subzone) continue;
      trips.push_back({o.poi_id, d.poi_id, day.date});
    }
  }
  return trips;
}

namespace {

int od_bin(const Poi& poi, const UserProfile& profile, const std::vector<Poi>& pois,
           const ThresholdScheme& scheme, DayType day_type) {
  if (scheme.context == SchemeContext::OdWorkday) {
    if (poi.poi_id == profile.home_poi ||
        (profile.work_poi && poi.poi_id == *profile.work_poi)) {
      return 0;
    }
  }
  return scheme.distance_bin(min_distance(poi, profile, pois, day_type));
}

}  // namespace

OdMatrix od_matrix(const std::vector<Trip>& trips, const UserProfile& profile,
                   const std::vector<Poi>& pois, const ThresholdScheme& scheme,
                   DayType day_type) {
  scheme.validate();
  const SchemeContext want = day_type == DayType::Workday ? SchemeContext::OdWorkday
                                                          : SchemeContext::OdOffday;
  if (scheme.context != want) {
    fail(errc::parameter, "od_matrix: scheme does not match the day type");
  }
  OdMatrix m;
  for (const Trip& t : trips) {
    const Poi& o = poi_by_id(pois, t.origin_poi, "od_matrix");
    const Poi& d = poi_by_id(pois, t.dest_poi, "od_matrix");
    const int row = od_bin(o, profile, pois, scheme, day_type);
    const int col = od_bin(d, profile, pois, scheme, day_type);
    m.cells[static_cast<size_t>(row * 4 + col)] += 1.0;
    ++m.trip_count;
  }
  if (m.trip_count > 0) {
    for (double& c : m.cells) c /= static_cast<double>(m.trip_count);
  }
  return m;
}

FeatureVector build_feature_vector(const std::string& user_id, DayType day_type,
                                   const OdMatrix& od, const DcdFeatures& dcd,
                                   int64_t day_count) {
  if (od.degenerate()) {
    fail(errc::exclusion, "feature vector for " + user_id + ": no trips of this day type");
  }
  if (day_count <= 0) {
    fail(errc::exclusion, "feature vector for " + user_id + ": no days of this day type");
  }
  double od_sum = 0.0;
  for (double c : od.cells) {
    if (c < -1e-12 || c > 1.0 + 1e-12) fail(errc::invalid_input, "OD cell out of [0,1]");
    od_sum += c;
  }
  if (std::abs(od_sum - 1.0) > 1e-9) fail(errc::invalid_input, "OD cells do not sum to 1");
  double dcd_sum = 0.0;
  for (double s : dcd.shares) {
    if (s < -1e-12 || s > 1.0 + 1e-12) fail(errc::invalid_input, "DCD share out of [0,1]");
    dcd_sum += s;
  }
  if (std::abs(dcd_sum - 1.0) > 1e-9) fail(errc::invalid_input, "DCD shares do not sum to 1");

  FeatureVector fv;
  fv.user_id = user_id;
  fv.day_type = day_type;
  for (size_t i = 0; i < 16; ++i) fv.values[i] = od.cells[i];
  for (size_t i = 0; i < 4; ++i) fv.values[16 + i] = dcd.shares[i];
  return fv;
}

std::vector<int64_t> histogram(const std::vector<double>& values, double bin_width_km) {
  if (values.empty()) fail(errc::empty_input, "histogram: no values");
  if (bin_width_km <= 0 || !std::isfinite(bin_width_km)) {
    fail(errc::parameter, "histogram: bin width must be positive");
  }
  std::vector<int64_t> counts;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0) fail(errc::invalid_input, "histogram: bad value");
    const size_t idx = static_cast<size_t>(v / bin_width_km);
    if (idx >= counts.size()) counts.resize(idx + 1, 0);
    ++counts[idx];
  }
  return counts;
}

std::vector<double> suggest_valleys(const std::vector<int64_t>& counts, int smooth_window,
                                    double bin_width_km) {
  if (smooth_window < 1) fail(errc::parameter, "suggest_valleys: window must be >= 1");
  if (bin_width_km <= 0) fail(errc::parameter, "suggest_valleys: bin width must be positive");
  const size_t n = counts.size();
  std::vector<double> smooth(n, 0.0);
  const int radius = smooth_window / 2;
  for (size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int cnt = 0;
    for (int j = -radius; j <= radius; ++j) {
      const int64_t idx = static_cast<int64_t>(i) + j;
      if (idx < 0 || idx >= static_cast<int64_t>(n)) continue;
      sum += static_cast<double>(counts[static_cast<size_t>(idx)]);
      ++cnt;
    }
    smooth[i] = sum / cnt;
  }
  std::vector<double> valleys;
  for (size_t i = 1; i + 1 < n; ++i) {
    if (smooth[i] < smooth[i - 1] && smooth[i] < smooth[i + 1]) {
      valleys.push_back((static_cast<double>(i) + 0.5) * bin_width_km);
    }
  }
  return valleys;
}

}  // namespace mobiscope

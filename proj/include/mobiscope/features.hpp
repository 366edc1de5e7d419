#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mobiscope/poi.hpp"

namespace mobiscope {

enum class SchemeContext { DcdWorkday, DcdOffday, OdWorkday, OdOffday };

// Distance binning for the four feature contexts. Every context has exactly
// four bins:
//   DcdWorkday/DcdOffday: [0], (0,e1], (e1,e2], (e2,inf)
//   OdWorkday:            {home/work}, [0,e1], (e1,e2], (e2,inf)
//   OdOffday:             [0,e1], (e1,e2], (e2,e3], (e3,inf)
// The first distance bin of the OD contexts is closed at zero.
struct ThresholdScheme {
  SchemeContext context = SchemeContext::DcdWorkday;
  std::vector<double> edges_km;

  static ThresholdScheme dcd(DayType day_type, std::vector<double> edges = {5.0, 15.0});
  static ThresholdScheme od(DayType day_type, std::vector<double> edges = {});

  void validate() const;
  static constexpr int kBins = 4;

  // Distance-only bin for OD contexts; the identity bin of OdWorkday is
  // handled by the caller, so for that context this returns 1..3.
  int distance_bin(double km) const;
  // Bin for a daily characteristic distance (DCD contexts only).
  int dcd_bin(double km, double zero_snap_m = 10.0) const;
  std::string bin_label(int bin) const;
};

// Root-mean-square distance of positions from their mean coordinate.
double radius_of_gyration(const std::vector<GeoPoint>& positions);

// RMS home-distance over the day's visited POIs excluding home and work,
// weighted by visit count and normalized by the number of distinct POIs.
// Days with only home/work visits yield 0.
double daily_characteristic_distance(const DayRecord& day, const UserProfile& profile,
                                     const std::vector<Poi>& pois);

struct DcdSeries {
  DayType day_type = DayType::Offday;
  std::vector<std::pair<int64_t, double>> values;  // (date, dcd_km)
};

DcdSeries dcd_series(const std::vector<DayRecord>& days, const UserProfile& profile,
                     const std::vector<Poi>& pois, DayType day_type);

struct DcdFeatures {
  std::array<double, ThresholdScheme::kBins> shares{};
};

DcdFeatures dcd_features(const DcdSeries& series, const ThresholdScheme& scheme,
                         double zero_snap_m = 10.0);

// Distance from a POI to the nearest reference location: home on Offdays,
// home or work on Workdays. Zero only for the reference POIs themselves.
double min_distance(const Poi& poi, const UserProfile& profile,
                    const std::vector<Poi>& pois, DayType day_type);

struct Trip {
  int origin_poi = -1;
  int dest_poi = -1;
  int64_t date = 0;
};

// Consecutive visit pairs within each day record. Pairs whose endpoints share
// a known subzone are dropped; POIs outside the subzone map never match each
// other.
std::vector<Trip> extract_trips(const std::vector<DayRecord>& days,
                                const std::vector<Poi>& pois);

struct OdMatrix {
  std::array<double, 16> cells{};  // row-major origin x destination
  int64_t trip_count = 0;

  bool degenerate() const { return trip_count == 0; }
};

OdMatrix od_matrix(const std::vector<Trip>& trips, const UserProfile& profile,
                   const std::vector<Poi>& pois, const ThresholdScheme& scheme,
                   DayType day_type);

struct FeatureVector {
  std::string user_id;
  DayType day_type = DayType::Offday;
  std::array<double, 20> values{};  // 16 OD cells row-major, then 4 DCD shares
};

// Validates and packs the two parts; degenerate inputs (no trips or no days)
// raise an exclusion error so callers drop the user from clustering.
FeatureVector build_feature_vector(const std::string& user_id, DayType day_type,
                                   const OdMatrix& od, const DcdFeatures& dcd,
                                   int64_t day_count);

// Fixed-width histogram from 0 with the given bin width.
std::vector<int64_t> histogram(const std::vector<double>& values, double bin_width_km);

// Local minima of the smoothed histogram (centered moving average), reported
// as bin-center distances; endpoints are never valleys.
std::vector<double> suggest_valleys(const std::vector<int64_t>& counts, int smooth_window,
                                    double bin_width_km);

}  // namespace mobiscope

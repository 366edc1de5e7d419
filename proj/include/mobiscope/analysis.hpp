#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mobiscope/features.hpp"

namespace mobiscope {

// What a "frequency" counts: every labeled visit, or each distinct labeled
// POI once.
enum class FrequencyUnit { Visits, Pois };

// Per-user tallies over the 4 distance rows x 10 category columns grid that
// both heatmap statistics consume.
struct UserCellCounts {
  std::string user_id;
  std::array<std::array<int64_t, kCategoryCount>, ThresholdScheme::kBins> counts{};
  int64_t total = 0;
};

// Bins one user's labeled visits of the given day type. Unlabeled POIs are
// skipped; rows come from min_distance binned with the matching OD scheme.
UserCellCounts bin_labeled_visits(const std::string& user_id,
                                  const std::vector<DayRecord>& days,
                                  const std::vector<Poi>& pois, const UserProfile& profile,
                                  const ThresholdScheme& scheme, DayType day_type,
                                  FrequencyUnit unit = FrequencyUnit::Visits);

enum class HeatmapKind { Commonality, Frequency };

inline const char* to_string(HeatmapKind k) {
  return k == HeatmapKind::Commonality ? "Commonality" : "Frequency";
}

struct HeatmapGrid {
  int cluster_id = 0;
  HeatmapKind kind = HeatmapKind::Commonality;
  std::array<std::array<double, kCategoryCount>, ThresholdScheme::kBins> cells{};
  int counted_users = 0;
  int skipped_users = 0;  // Frequency only: members with no labeled visits
};

// Share of cluster members with at least one visit in each cell.
HeatmapGrid user_commonality(const std::vector<UserCellCounts>& members, int cluster_id);

// Mean over members of each member's per-cell share of their own visits;
// members with no labeled visits are skipped and the denominator shrinks.
HeatmapGrid average_frequency(const std::vector<UserCellCounts>& members, int cluster_id);

// Suggested color caps when rendering the two heatmap kinds; metadata only,
// never applied to the exported values.
inline constexpr double kCommonalityColorCap = 0.25;
inline constexpr double kFrequencyColorCap = 0.17;

struct ViolinUser {
  std::string user_id;
  bool working = false;
  std::optional<double> home_work_km;
  std::vector<double> values;  // nonzero DCDs, ascending
  std::optional<double> median_km;
};

struct ViolinExport {
  DayType day_type = DayType::Offday;
  std::vector<ViolinUser> users;
};

struct ViolinInput {
  UserProfile profile;
  DcdSeries series;
};

// One violin per user: zero days are stripped, the median is over the nonzero
// values, and users order by commute distance (Workday) or median (Offday)
// with all-zero users last.
ViolinExport violin_export(const std::vector<ViolinInput>& inputs, DayType day_type,
                           double zero_snap_m = 10.0);

// Median of the values above the zero snap, for correlation inputs.
std::optional<double> median_nonzero(const DcdSeries& series, double zero_snap_m = 10.0);

}  // namespace mobiscope

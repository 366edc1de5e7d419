#include "mobiscope/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mobiscope {

UserCellCounts bin_labeled_visits(const std::string& user_id,
                                  const std::vector<DayRecord>& days,
                                  const std::vector<Poi>& pois, const UserProfile& profile,
                                  const ThresholdScheme& scheme, DayType day_type,
                                  FrequencyUnit unit) {
  scheme.validate();
  const SchemeContext want = day_type == DayType::Workday ? SchemeContext::OdWorkday
                                                          : SchemeContext::OdOffday;
  if (scheme.context != want) {
    fail(errc::parameter, "bin_labeled_visits: scheme does not match the day type");
  }
  UserCellCounts out;
  out.user_id = user_id;
  std::set<int> seen_pois;
  for (const DayRecord& day : days) {
    if (day.day_type != day_type) continue;
    for (const Visit& v : day.visits) {
      if (v.poi_id < 0 || static_cast<size_t>(v.poi_id) >= pois.size()) {
        fail(errc::precondition, "bin_labeled_visits: visit references unknown POI");
      }
      const Poi& poi = pois[static_cast<size_t>(v.poi_id)];
      if (!poi.category) continue;
      if (unit == FrequencyUnit::Pois && !seen_pois.insert(v.poi_id).second) continue;
      int row;
      if (scheme.context == SchemeContext::OdWorkday &&
          (v.poi_id == profile.home_poi ||
           (profile.work_poi && v.poi_id == *profile.work_poi))) {
        row = 0;
      } else {
        row = scheme.distance_bin(min_distance(poi, profile, pois, day_type));
      }
      ++out.counts[static_cast<size_t>(row)][static_cast<size_t>(*poi.category)];
      ++out.total;
    }
  }
  return out;
}

HeatmapGrid user_commonality(const std::vector<UserCellCounts>& members, int cluster_id) {
  if (members.empty()) fail(errc::empty_input, "user_commonality: empty cluster");
  HeatmapGrid grid;
  grid.cluster_id = cluster_id;
  grid.kind = HeatmapKind::Commonality;
  grid.counted_users = static_cast<int>(members.size());
  const double n = static_cast<double>(members.size());
  for (const UserCellCounts& user : members) {
    for (int r = 0; r < ThresholdScheme::kBins; ++r) {
      for (int c = 0; c < kCategoryCount; ++c) {
        if (user.counts[static_cast<size_t>(r)][static_cast<size_t>(c)] > 0) {
          grid.cells[static_cast<size_t>(r)][static_cast<size_t>(c)] += 1.0;
        }
      }
    }
  }
  for (auto& row : grid.cells) {
    for (double& cell : row) cell /= n;
  }
  return grid;
}

HeatmapGrid average_frequency(const std::vector<UserCellCounts>& members, int cluster_id) {
  if (members.empty()) fail(errc::empty_input, "average_frequency: empty cluster");
  HeatmapGrid grid;
  grid.cluster_id = cluster_id;
  grid.kind = HeatmapKind::Frequency;
  for (const UserCellCounts& user : members) {
    if (user.total == 0) {
      ++grid.skipped_users;
      continue;
    }
    ++grid.counted_users;
    const double total = static_cast<double>(user.total);
    for (int r = 0; r < ThresholdScheme::kBins; ++r) {
      for (int c = 0; c < kCategoryCount; ++c) {
        grid.cells[static_cast<size_t>(r)][static_cast<size_t>(c)] +=
            static_cast<double>(user.counts[static_cast<size_t>(r)][static_cast<size_t>(c)]) /
            total;
      }
    }
  }
  if (grid.counted_users == 0) {
    fail(errc::degenerate, "average_frequency: no member has labeled visits");
  }
  const double n = static_cast<double>(grid.counted_users);
  for (auto& row : grid.cells) {
    for (double& cell : row) cell /= n;
  }
  return grid;
}

std::optional<double> median_nonzero(const DcdSeries& series, double zero_snap_m) {
  std::vector<double> vals;
  for (const auto& [date, km] : series.values) {
    if (km * 1000.0 >= zero_snap_m) vals.push_back(km);
  }
  if (vals.empty()) return std::nullopt;
  std::sort(vals.begin(), vals.end());
  const size_t n = vals.size();
  if (n % 2 == 1) return vals[n / 2];
  return (vals[n / 2 - 1] + vals[n / 2]) / 2.0;
}

ViolinExport violin_export(const std::vector<ViolinInput>& inputs, DayType day_type,
                           double zero_snap_m) {
  ViolinExport out;
  out.day_type = day_type;
  for (const ViolinInput& in : inputs) {
    if (in.series.day_type != day_type) {
      fail(errc::parameter, "violin_export: series day type mismatch for " +
                                in.profile.user_id);
    }
    ViolinUser user;
    user.user_id = in.profile.user_id;
    user.working = in.profile.working();
    user.home_work_km = in.profile.home_work_km;
    for (const auto& [date, km] : in.series.values) {
      if (km * 1000.0 >= zero_snap_m) user.values.push_back(km);
    }
    std::sort(user.values.begin(), user.values.end());
    if (!user.values.empty()) {
      const size_t n = user.values.size();
      user.median_km = n % 2 == 1 ? user.values[n / 2]
                                  : (user.values[n / 2 - 1] + user.values[n / 2]) / 2.0;
    }
    out.users.push_back(std::move(user));
  }
  auto key = [day_type](const ViolinUser& u) {
    // All-zero users sort behind everything else.
    const double rank = day_type == DayType::Workday
                            ? u.home_work_km.value_or(std::numeric_limits<double>::infinity())
                            : u.median_km.value_or(std::numeric_limits<double>::infinity());
    return std::make_pair(u.median_km ? 0 : 1, rank);
  };
  std::stable_sort(out.users.begin(), out.users.end(),
                   [&](const ViolinUser& a, const ViolinUser& b) {
                     const auto ka = key(a), kb = key(b);
                     if (ka != kb) return ka < kb;
                     return a.user_id < b.user_id;
                   });
  return out;
}

}  // namespace mobiscope

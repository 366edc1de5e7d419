#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mobiscope/geo.hpp"

namespace mobiscope {

struct GpsFix {
  std::string user_id;
  GeoPoint point;
  int64_t start_epoch_s = 0;
  int64_t end_epoch_s = 0;

  bool operator==(const GpsFix&) const = default;
};

struct RecordError {
  size_t line = 0;  // 1-based line number in the source stream
  std::string message;
};

enum class FixFormat { csv, jsonl };

struct ParseResult {
  std::vector<GpsFix> fixes;
  std::vector<RecordError> errors;
};

// Parses GPS fixes. Malformed rows are collected, not thrown; if more than
// half of the data rows are malformed the whole stream is rejected.
ParseResult parse_fixes(std::istream& in, FixFormat format);
ParseResult parse_fixes_file(const std::string& path, FixFormat format);

std::string serialize_fixes_csv(const std::vector<GpsFix>& fixes);

struct UserDataset {
  std::string user_id;
  std::vector<GpsFix> fixes;  // sorted by start, overlaps resolved
};

// Groups fixes per user, sorts by start time and drops any fix that starts
// before the previous one ended by more than overlap_tolerance_s.
std::vector<UserDataset> group_users(std::vector<GpsFix> fixes,
                                     int64_t overlap_tolerance_s = 0);

struct ValidityParams {
  int min_valid_days = 30;
  double min_coverage = 0.5;
  double valid_day_hours = 8.0;
  int tz_offset_minutes = 480;
};

struct ValidityReport {
  int64_t recording_days = 0;
  int64_t valid_days = 0;
  double coverage_ratio = 0.0;
  bool accepted = false;
};

ValidityReport validity_filter(const UserDataset& ds, const ValidityParams& params = {});

}  // namespace mobiscope

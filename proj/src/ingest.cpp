#include "mobiscope/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mobiscope/timeutil.hpp"

namespace mobiscope {

namespace {

const char kCsvHeader[] = "user_id,lat,lon,start_epoch_s,end_epoch_s";

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size() && std::isfinite(out);
}

bool parse_int64(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

// Returns an error message, or empty when the fix passed validation.
std::string check_fix(const GpsFix& fix) {
  if (fix.user_id.empty()) return "empty user_id";
  if (!valid_point(fix.point)) return "coordinate out of range";
  if (fix.end_epoch_s < fix.start_epoch_s) return "end before start";
  return "";
}

void parse_csv_line(const std::string& line, size_t line_no, ParseResult& result) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  if (fields.size() != 5) {
    result.errors.push_back({line_no, "expected 5 fields, got " + std::to_string(fields.size())});
    return;
  }
  GpsFix fix;
  fix.user_id = fields[0];
  if (!parse_double(fields[1], fix.point.lat) || !parse_double(fields[2], fix.point.lon)) {
    result.errors.push_back({line_no, "bad coordinate"});
    return;
  }
  if (!parse_int64(fields[3], fix.start_epoch_s) || !parse_int64(fields[4], fix.end_epoch_s)) {
    result.errors.push_back({line_no, "bad timestamp"});
    return;
  }
  std::string err = check_fix(fix);
  if (!err.empty()) {
    result.errors.push_back({line_no, err});
    return;
  }
  result.fixes.push_back(std::move(fix));
}

void parse_jsonl_line(const std::string& line, size_t line_no, ParseResult& result) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    result.errors.push_back({line_no, "invalid json"});
    return;
  }
  if (!rec.is_object()) {
    result.errors.push_back({line_no, "record is not an object"});
    return;
  }
  GpsFix fix;
  if (!rec.contains("user_id") || !rec["user_id"].is_string() || !rec.contains("lat") ||
      !rec["lat"].is_number() || !rec.contains("lon") || !rec["lon"].is_number() ||
      !rec.contains("start_epoch_s") || !rec["start_epoch_s"].is_number_integer() ||
      !rec.contains("end_epoch_s") || !rec["end_epoch_s"].is_number_integer()) {
    result.errors.push_back({line_no, "missing or mistyped field"});
    return;
  }
  fix.user_id = rec["user_id"].get<std::string>();
  fix.point.lat = rec["lat"].get<double>();
  fix.point.lon = rec["lon"].get<double>();
  fix.start_epoch_s = rec["start_epoch_s"].get<int64_t>();
  fix.end_epoch_s = rec["end_epoch_s"].get<int64_t>();
  std::string err = check_fix(fix);
  if (!err.empty()) {
    result.errors.push_back({line_no, err});
    return;
  }
  result.fixes.push_back(std::move(fix));
}

}  // namespace

ParseResult parse_fixes(std::istream& in, FixFormat format) {
  ParseResult result;
  std::string line;
  size_t line_no = 0;
  size_t data_rows = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (format == FixFormat::csv && !saw_header) {
      if (line != kCsvHeader) {
        fail(errc::corrupt_input,
             "line 1: expected header \"" + std::string(kCsvHeader) + "\"");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    ++data_rows;
    if (format == FixFormat::csv) {
      parse_csv_line(line, line_no, result);
    } else {
      parse_jsonl_line(line, line_no, result);
    }
  }
  if (format == FixFormat::csv && !saw_header && line_no == 0) {
    // An entirely empty file has no header either; treat as no fixes.
    return result;
  }
  if (data_rows > 0 && result.errors.size() * 2 > data_rows) {
    fail(errc::corrupt_input, "more than half of " + std::to_string(data_rows) +
                                  " rows are malformed (" +
                                  std::to_string(result.errors.size()) + " bad)");
  }
  return result;
}

ParseResult parse_fixes_file(const std::string& path, FixFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open " + path);
  return parse_fixes(in, format);
}

std::string serialize_fixes_csv(const std::vector<GpsFix>& fixes) {
  std::string out = kCsvHeader;
  out.push_back('\n');
  char buf[160];
  for (const GpsFix& f : fixes) {
    std::snprintf(buf, sizeof(buf), "%.7f,%.7f,%lld,%lld", f.point.lat, f.point.lon,
                  static_cast<long long>(f.start_epoch_s),
                  static_cast<long long>(f.end_epoch_s));
    out += f.user_id;
    out.push_back(',');
    out += buf;
    out.push_back('\n');
  }
  return out;
}

std::vector<UserDataset> group_users(std::vector<GpsFix> fixes, int64_t overlap_tolerance_s) {
  std::map<std::string, std::vector<GpsFix>> by_user;
  for (GpsFix& f : fixes) {
    by_user[f.user_id].push_back(std::move(f));
  }
  std::vector<UserDataset> out;
  out.reserve(by_user.size());
  for (auto& [uid, user_fixes] : by_user) {
    std::stable_sort(user_fixes.begin(), user_fixes.end(),
                     [](const GpsFix& a, const GpsFix& b) {
                       if (a.start_epoch_s != b.start_epoch_s) {
                         return a.start_epoch_s < b.start_epoch_s;
                       }
                       return a.end_epoch_s < b.end_epoch_s;
                     });
    std::vector<GpsFix> kept;
    kept.reserve(user_fixes.size());
    for (GpsFix& f : user_fixes) {
      if (!kept.empty() && f.start_epoch_s < kept.back().end_epoch_s - overlap_tolerance_s) {
        continue;  // overlaps the previous fix beyond tolerance
      }
      kept.push_back(std::move(f));
    }
    out.push_back({uid, std::move(kept)});
  }
  return out;
}

ValidityReport validity_filter(const UserDataset& ds, const ValidityParams& params) {
  ValidityReport report;
  if (ds.fixes.empty()) return report;

  const int64_t tz = params.tz_offset_minutes;
  int64_t min_start = ds.fixes.front().start_epoch_s;
  int64_t max_end = ds.fixes.front().end_epoch_s;
  std::map<int64_t, std::vector<std::pair<int64_t, int64_t>>> day_intervals;
  for (const GpsFix& f : ds.fixes) {
    min_start = std::min(min_start, f.start_epoch_s);
    max_end = std::max(max_end, f.end_epoch_s);
    if (f.end_epoch_s <= f.start_epoch_s) continue;  // instant fixes cover nothing
    int64_t first = local_day(f.start_epoch_s, static_cast<int>(tz));
    int64_t last = local_day(f.end_epoch_s - 1, static_cast<int>(tz));
    for (int64_t d = first; d <= last; ++d) {
      int64_t day_start = day_start_epoch(d, static_cast<int>(tz));
      int64_t lo = std::max(f.start_epoch_s, day_start);
      int64_t hi = std::min(f.end_epoch_s, day_start + kSecondsPerDay);
      if (hi > lo) day_intervals[d].push_back({lo, hi});
    }
  }

  int64_t first_day = local_day(min_start, static_cast<int>(tz));
  int64_t last_day = max_end > min_start
                         ? local_day(max_end - 1, static_cast<int>(tz))
                         : local_day(min_start, static_cast<int>(tz));
  last_day = std::max(last_day, first_day);
  report.recording_days = last_day - first_day + 1;

  const int64_t need_s = static_cast<int64_t>(params.valid_day_hours * 3600.0);
  for (auto& [day, intervals] : day_intervals) {
    std::sort(intervals.begin(), intervals.end());
    int64_t covered = 0;
    int64_t cur_lo = 0, cur_hi = -1;
    bool open = false;
    for (auto [lo, hi] : intervals) {
      if (!open || lo > cur_hi) {
        if (open) covered += cur_hi - cur_lo;
        cur_lo = lo;
        cur_hi = hi;
        open = true;
      } else {
        cur_hi = std::max(cur_hi, hi);
      }
    }
    if (open) covered += cur_hi - cur_lo;
    if (covered >= need_s) ++report.valid_days;
  }

  report.coverage_ratio = report.recording_days > 0
                              ? static_cast<double>(report.valid_days) /
                                    static_cast<double>(report.recording_days)
                              : 0.0;
  report.accepted = report.valid_days >= params.min_valid_days &&
                    report.coverage_ratio >= params.min_coverage;
  return report;
}

}  // namespace mobiscope

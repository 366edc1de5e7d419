#include "mobiscope/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mobiscope/error.hpp"

namespace mobiscope {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct TomlValue {
  enum class Kind { string, integer, floating, boolean, array } kind;
  std::string str;
  int64_t i = 0;
  double f = 0.0;
  bool b = false;
  std::vector<TomlValue> items;
};

// Parses one TOML value from s starting at pos; advances pos past it.
TomlValue parse_value(const std::string& s, size_t& pos, int line_no) {
  auto err = [line_no](const std::string& msg) {
    fail(errc::config, "config line " + std::to_string(line_no) + ": " + msg);
  };
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos >= s.size()) err("missing value");
  TomlValue v;
  const char c = s[pos];
  if (c == '"') {
    v.kind = TomlValue::Kind::string;
    ++pos;
    while (pos < s.size() && s[pos] != '"') {
      if (s[pos] == '\\' && pos + 1 < s.size()) {
        const char esc = s[pos + 1];
        if (esc == '"' || esc == '\\') {
          v.str.push_back(esc);
          pos += 2;
          continue;
        }
      }
      v.str.push_back(s[pos]);
      ++pos;
    }
    if (pos >= s.size()) err("unterminated string");
    ++pos;
    return v;
  }
  if (c == '[') {
    v.kind = TomlValue::Kind::array;
    ++pos;
    for (;;) {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos >= s.size()) err("unterminated array");
      if (s[pos] == ']') {
        ++pos;
        return v;
      }
      v.items.push_back(parse_value(s, pos, line_no));
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos < s.size() && s[pos] == ',') {
        ++pos;
        continue;
      }
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        return v;
      }
      err("expected ',' or ']' in array");
    }
  }
  if (s.compare(pos, 4, "true") == 0) {
    v.kind = TomlValue::Kind::boolean;
    v.b = true;
    pos += 4;
    return v;
  }
  if (s.compare(pos, 5, "false") == 0) {
    v.kind = TomlValue::Kind::boolean;
    v.b = false;
    pos += 5;
    return v;
  }
  size_t end = pos;
  while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end])) &&
         s[end] != ',' && s[end] != ']' && s[end] != '#') {
    ++end;
  }
  const std::string tok = s.substr(pos, end - pos);
  if (tok.empty()) err("missing value");
  const bool is_float = tok.find_first_of(".eE") != std::string::npos &&
                        tok.find("0x") != 0;
  try {
    size_t used = 0;
    if (is_float) {
      v.kind = TomlValue::Kind::floating;
      v.f = std::stod(tok, &used);
    } else {
      v.kind = TomlValue::Kind::integer;
      v.i = std::stoll(tok, &used);
    }
    if (used != tok.size()) err("bad value '" + tok + "'");
  } catch (const std::exception&) {
    err("bad value '" + tok + "'");
  }
  pos = end;
  return v;
}

double as_double(const TomlValue& v, const std::string& key, int line_no) {
  if (v.kind == TomlValue::Kind::floating) return v.f;
  if (v.kind == TomlValue::Kind::integer) return static_cast<double>(v.i);
  fail(errc::config,
       "config line " + std::to_string(line_no) + ": " + key + " must be a number");
}

int64_t as_int(const TomlValue& v, const std::string& key, int line_no) {
  if (v.kind == TomlValue::Kind::integer) return v.i;
  fail(errc::config,
       "config line " + std::to_string(line_no) + ": " + key + " must be an integer");
}

std::string as_string(const TomlValue& v, const std::string& key, int line_no) {
  if (v.kind == TomlValue::Kind::string) return v.str;
  fail(errc::config,
       "config line " + std::to_string(line_no) + ": " + key + " must be a string");
}

bool as_bool(const TomlValue& v, const std::string& key, int line_no) {
  if (v.kind == TomlValue::Kind::boolean) return v.b;
  fail(errc::config,
       "config line " + std::to_string(line_no) + ": " + key + " must be a boolean");
}

std::vector<double> as_double_array(const TomlValue& v, const std::string& key, int line_no) {
  if (v.kind != TomlValue::Kind::array) {
    fail(errc::config,
         "config line " + std::to_string(line_no) + ": " + key + " must be an array");
  }
  std::vector<double> out;
  for (const TomlValue& item : v.items) out.push_back(as_double(item, key, line_no));
  return out;
}

std::vector<std::string> as_string_array(const TomlValue& v, const std::string& key,
                                         int line_no) {
  if (v.kind != TomlValue::Kind::array) {
    fail(errc::config,
         "config line " + std::to_string(line_no) + ": " + key + " must be an array");
  }
  std::vector<std::string> out;
  for (const TomlValue& item : v.items) out.push_back(as_string(item, key, line_no));
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.1f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%g", v);
  }
  return buf;
}

std::string fmt_double_array(const std::vector<double>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt_double(v[i]);
  }
  s += "]";
  return s;
}

std::string fmt_string_array(const std::vector<std::string>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += "\"" + v[i] + "\"";
  }
  s += "]";
  return s;
}

}  // namespace

PipelineConfig PipelineConfig::parse_toml(const std::string& text) {
  PipelineConfig cfg;
  using Setter = std::function<void(const TomlValue&, int)>;
  std::map<std::string, std::map<std::string, Setter>> schema;

  schema["ingest"] = {
      {"format", [&](const TomlValue& v, int ln) { cfg.ingest.format = as_string(v, "format", ln); }},
      {"tz_offset_minutes",
       [&](const TomlValue& v, int ln) { cfg.ingest.tz_offset_minutes = static_cast<int>(as_int(v, "tz_offset_minutes", ln)); }},
      {"overlap_tolerance_s",
       [&](const TomlValue& v, int ln) { cfg.ingest.overlap_tolerance_s = as_int(v, "overlap_tolerance_s", ln); }},
      {"min_valid_days",
       [&](const TomlValue& v, int ln) { cfg.ingest.min_valid_days = static_cast<int>(as_int(v, "min_valid_days", ln)); }},
      {"min_coverage",
       [&](const TomlValue& v, int ln) { cfg.ingest.min_coverage = as_double(v, "min_coverage", ln); }},
      {"valid_day_hours",
       [&](const TomlValue& v, int ln) { cfg.ingest.valid_day_hours = as_double(v, "valid_day_hours", ln); }},
  };
  schema["poi"] = {
      {"stay_dist_m", [&](const TomlValue& v, int ln) { cfg.poi.stay_dist_m = as_double(v, "stay_dist_m", ln); }},
      {"stay_time_min", [&](const TomlValue& v, int ln) { cfg.poi.stay_time_min = as_double(v, "stay_time_min", ln); }},
      {"stay_gap_min", [&](const TomlValue& v, int ln) { cfg.poi.stay_gap_min = as_double(v, "stay_gap_min", ln); }},
      {"merge_m", [&](const TomlValue& v, int ln) { cfg.poi.merge_m = as_double(v, "merge_m", ln); }},
      {"home_window_start_h",
       [&](const TomlValue& v, int ln) { cfg.poi.home_window_start_h = static_cast<int>(as_int(v, "home_window_start_h", ln)); }},
      {"home_window_end_h",
       [&](const TomlValue& v, int ln) { cfg.poi.home_window_end_h = static_cast<int>(as_int(v, "home_window_end_h", ln)); }},
      {"work_window_start_h",
       [&](const TomlValue& v, int ln) { cfg.poi.work_window_start_h = static_cast<int>(as_int(v, "work_window_start_h", ln)); }},
      {"work_window_end_h",
       [&](const TomlValue& v, int ln) { cfg.poi.work_window_end_h = static_cast<int>(as_int(v, "work_window_end_h", ln)); }},
      {"work_presence_ratio",
       [&](const TomlValue& v, int ln) { cfg.poi.work_presence_ratio = as_double(v, "work_presence_ratio", ln); }},
  };
  schema["labeling"] = {
      {"max_m", [&](const TomlValue& v, int ln) { cfg.labeling.max_m = as_double(v, "max_m", ln); }},
      {"zone_id_property",
       [&](const TomlValue& v, int ln) { cfg.labeling.zone_id_property = as_string(v, "zone_id_property", ln); }},
  };
  schema["features"] = {
      {"dcd_edges_km",
       [&](const TomlValue& v, int ln) { cfg.features.dcd_edges_km = as_double_array(v, "dcd_edges_km", ln); }},
      {"od_workday_edges_km",
       [&](const TomlValue& v, int ln) { cfg.features.od_workday_edges_km = as_double_array(v, "od_workday_edges_km", ln); }},
      {"od_offday_edges_km",
       [&](const TomlValue& v, int ln) { cfg.features.od_offday_edges_km = as_double_array(v, "od_offday_edges_km", ln); }},
      {"zero_snap_m",
       [&](const TomlValue& v, int ln) { cfg.features.zero_snap_m = as_double(v, "zero_snap_m", ln); }},
  };
  schema["cluster"] = {
      {"k", [&](const TomlValue& v, int ln) { cfg.cluster.k = static_cast<int>(as_int(v, "k", ln)); }},
      {"seed", [&](const TomlValue& v, int ln) { cfg.cluster.seed = static_cast<uint64_t>(as_int(v, "seed", ln)); }},
      {"restarts", [&](const TomlValue& v, int ln) { cfg.cluster.restarts = static_cast<int>(as_int(v, "restarts", ln)); }},
      {"max_iter", [&](const TomlValue& v, int ln) { cfg.cluster.max_iter = static_cast<int>(as_int(v, "max_iter", ln)); }},
      {"tol", [&](const TomlValue& v, int ln) { cfg.cluster.tol = as_double(v, "tol", ln); }},
      {"k_scan_min", [&](const TomlValue& v, int ln) { cfg.cluster.k_scan_min = static_cast<int>(as_int(v, "k_scan_min", ln)); }},
      {"k_scan_max", [&](const TomlValue& v, int ln) { cfg.cluster.k_scan_max = static_cast<int>(as_int(v, "k_scan_max", ln)); }},
  };
  schema["analysis"] = {
      {"frequency_unit",
       [&](const TomlValue& v, int ln) { cfg.analysis.frequency_unit = as_string(v, "frequency_unit", ln); }},
      {"permutations",
       [&](const TomlValue& v, int ln) { cfg.analysis.permutations = static_cast<int>(as_int(v, "permutations", ln)); }},
      {"emit_plot_specs",
       [&](const TomlValue& v, int ln) { cfg.analysis.emit_plot_specs = as_bool(v, "emit_plot_specs", ln); }},
  };
  schema["paths"] = {
      {"fixes", [&](const TomlValue& v, int ln) { cfg.paths.fixes = as_string_array(v, "fixes", ln); }},
      {"catalog", [&](const TomlValue& v, int ln) { cfg.paths.catalog = as_string(v, "catalog", ln); }},
      {"subzones", [&](const TomlValue& v, int ln) { cfg.paths.subzones = as_string(v, "subzones", ln); }},
      {"out", [&](const TomlValue& v, int ln) { cfg.paths.out = as_string(v, "out", ln); }},
  };
  schema["run"] = {
      {"threads", [&](const TomlValue& v, int ln) { cfg.run.threads = static_cast<int>(as_int(v, "threads", ln)); }},
  };

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string section;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      if (line.back() != ']') {
        fail(errc::config, "config line " + std::to_string(line_no) + ": bad section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (schema.find(section) == schema.end()) {
        fail(errc::config,
             "config line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(errc::config, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (section.empty()) {
      fail(errc::config,
           "config line " + std::to_string(line_no) + ": key outside any section");
    }
    auto& keys = schema[section];
    auto it = keys.find(key);
    if (it == keys.end()) {
      fail(errc::config, "config line " + std::to_string(line_no) + ": unknown key " +
                             section + "." + key);
    }
    size_t pos = eq + 1;
    const TomlValue value = parse_value(line, pos, line_no);
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos < line.size() && line[pos] != '#') {
      fail(errc::config,
           "config line " + std::to_string(line_no) + ": trailing characters after value");
    }
    it->second(value, line_no);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load_toml(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

std::string PipelineConfig::dump_toml() const {
  std::ostringstream s;
  s << "[ingest]\n";
  s << "format = \"" << ingest.format << "\"\n";
  s << "tz_offset_minutes = " << ingest.tz_offset_minutes << "\n";
  s << "overlap_tolerance_s = " << ingest.overlap_tolerance_s << "\n";
  s << "min_valid_days = " << ingest.min_valid_days << "\n";
  s << "min_coverage = " << fmt_double(ingest.min_coverage) << "\n";
  s << "valid_day_hours = " << fmt_double(ingest.valid_day_hours) << "\n";
  s << "\n[poi]\n";
  s << "stay_dist_m = " << fmt_double(poi.stay_dist_m) << "\n";
  s << "stay_time_min = " << fmt_double(poi.stay_time_min) << "\n";
  s << "stay_gap_min = " << fmt_double(poi.stay_gap_min) << "\n";
  s << "merge_m = " << fmt_double(poi.merge_m) << "\n";
  s << "home_window_start_h = " << poi.home_window_start_h << "\n";
  s << "home_window_end_h = " << poi.home_window_end_h << "\n";
  s << "work_window_start_h = " << poi.work_window_start_h << "\n";
  s << "work_window_end_h = " << poi.work_window_end_h << "\n";
  s << "work_presence_ratio = " << fmt_double(poi.work_presence_ratio) << "\n";
  s << "\n[labeling]\n";
  s << "max_m = " << fmt_double(labeling.max_m) << "\n";
  s << "zone_id_property = \"" << labeling.zone_id_property << "\"\n";
  s << "\n[features]\n";
  s << "dcd_edges_km = " << fmt_double_array(features.dcd_edges_km) << "\n";
  s << "od_workday_edges_km = " << fmt_double_array(features.od_workday_edges_km) << "\n";
  s << "od_offday_edges_km = " << fmt_double_array(features.od_offday_edges_km) << "\n";
  s << "zero_snap_m = " << fmt_double(features.zero_snap_m) << "\n";
  s << "\n[cluster]\n";
  s << "k = " << cluster.k << "\n";
  s << "seed = " << cluster.seed << "\n";
  s << "restarts = " << cluster.restarts << "\n";
  s << "max_iter = " << cluster.max_iter << "\n";
  s << "tol = " << cluster.tol << "\n";
  s << "k_scan_min = " << cluster.k_scan_min << "\n";
  s << "k_scan_max = " << cluster.k_scan_max << "\n";
  s << "\n[analysis]\n";
  s << "frequency_unit = \"" << analysis.frequency_unit << "\"\n";
  s << "permutations = " << analysis.permutations << "\n";
  s << "emit_plot_specs = " << (analysis.emit_plot_specs ? "true" : "false") << "\n";
  s << "\n[paths]\n";
  s << "fixes = " << fmt_string_array(paths.fixes) << "\n";
  s << "catalog = \"" << paths.catalog << "\"\n";
  s << "subzones = \"" << paths.subzones << "\"\n";
  s << "out = \"" << paths.out << "\"\n";
  s << "\n[run]\n";
  s << "threads = " << run.threads << "\n";
  return s.str();
}

void PipelineConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) fail(errc::config, "config: " + msg);
  };
  check(ingest.format == "csv" || ingest.format == "jsonl",
        "ingest.format must be \"csv\" or \"jsonl\"");
  check(ingest.overlap_tolerance_s >= 0, "ingest.overlap_tolerance_s must be >= 0");
  check(ingest.min_valid_days >= 1, "ingest.min_valid_days must be >= 1");
  check(ingest.min_coverage >= 0.0 && ingest.min_coverage <= 1.0,
        "ingest.min_coverage must be in [0,1]");
  check(ingest.valid_day_hours > 0.0 && ingest.valid_day_hours <= 24.0,
        "ingest.valid_day_hours must be in (0,24]");
  check(poi.stay_dist_m > 0, "poi.stay_dist_m must be positive");
  check(poi.stay_time_min > 0, "poi.stay_time_min must be positive");
  check(poi.stay_gap_min >= 0, "poi.stay_gap_min must be >= 0");
  check(poi.merge_m > 0, "poi.merge_m must be positive");
  auto window_ok = [](int a, int b) { return a >= 0 && b <= 24 && a < b; };
  check(window_ok(poi.home_window_start_h, poi.home_window_end_h),
        "poi home window must satisfy 0 <= start < end <= 24");
  check(window_ok(poi.work_window_start_h, poi.work_window_end_h),
        "poi work window must satisfy 0 <= start < end <= 24");
  check(poi.work_presence_ratio >= 0.0 && poi.work_presence_ratio <= 1.0,
        "poi.work_presence_ratio must be in [0,1]");
  check(labeling.max_m > 0, "labeling.max_m must be positive");
  check(!labeling.zone_id_property.empty(), "labeling.zone_id_property must be set");
  auto edges_ok = [](const std::vector<double>& e, size_t n) {
    if (e.size() != n) return false;
    double prev = 0.0;
    for (double v : e) {
      if (!(v > prev) || !std::isfinite(v)) return false;
      prev = v;
    }
    return true;
  };
  check(edges_ok(features.dcd_edges_km, 2),
        "features.dcd_edges_km must be 2 ascending positive values");
  check(edges_ok(features.od_workday_edges_km, 2),
        "features.od_workday_edges_km must be 2 ascending positive values");
  check(edges_ok(features.od_offday_edges_km, 3),
        "features.od_offday_edges_km must be 3 ascending positive values");
  check(features.zero_snap_m >= 0, "features.zero_snap_m must be >= 0");
  check(cluster.k >= 1, "cluster.k must be >= 1");
  check(cluster.restarts >= 1, "cluster.restarts must be >= 1");
  check(cluster.max_iter >= 1, "cluster.max_iter must be >= 1");
  check(cluster.tol >= 0, "cluster.tol must be >= 0");
  check(cluster.k_scan_min >= 1 && cluster.k_scan_max >= cluster.k_scan_min,
        "cluster k scan range must satisfy 1 <= min <= max");
  check(analysis.frequency_unit == "visits" || analysis.frequency_unit == "pois",
        "analysis.frequency_unit must be \"visits\" or \"pois\"");
  check(analysis.permutations >= 0, "analysis.permutations must be >= 0");
  check(run.threads >= 0, "run.threads must be >= 0");
}

}  // namespace mobiscope

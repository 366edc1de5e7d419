#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mobiscope {

// Everything the pipeline can be told, with the defaults used throughout.
// Serialized as a small TOML subset: [section], key = value, strings, ints,
// floats, bools and flat arrays.
struct PipelineConfig {
  struct Ingest {
    std::string format = "csv";  // csv | jsonl
    int tz_offset_minutes = 480;
    int64_t overlap_tolerance_s = 0;
    int min_valid_days = 30;
    double min_coverage = 0.5;
    double valid_day_hours = 8.0;
    bool operator==(const Ingest&) const = default;
  } ingest;

  struct Poi {
    double stay_dist_m = 200.0;
    double stay_time_min = 20.0;
    double stay_gap_min = 5.0;
    double merge_m = 100.0;
    int home_window_start_h = 0;
    int home_window_end_h = 6;
    int work_window_start_h = 10;
    int work_window_end_h = 17;
    double work_presence_ratio = 0.4;
    bool operator==(const Poi&) const = default;
  } poi;

  struct Labeling {
    double max_m = 400.0;
    std::string zone_id_property = "SUBZONE_N";
    bool operator==(const Labeling&) const = default;
  } labeling;

  struct Features {
    std::vector<double> dcd_edges_km = {5.0, 15.0};
    std::vector<double> od_workday_edges_km = {2.0, 8.0};
    std::vector<double> od_offday_edges_km = {1.0, 5.0, 15.0};
    double zero_snap_m = 10.0;
    bool operator==(const Features&) const = default;
  } features;

  struct Cluster {
    int k = 3;
    uint64_t seed = 42;
    int restarts = 50;
    int max_iter = 300;
    double tol = 1e-6;
    int k_scan_min = 1;
    int k_scan_max = 10;
    bool operator==(const Cluster&) const = default;
  } cluster;

  struct Analysis {
    std::string frequency_unit = "visits";  // visits | pois
    int permutations = 10000;
    bool emit_plot_specs = false;
    bool operator==(const Analysis&) const = default;
  } analysis;

  struct Paths {
    std::vector<std::string> fixes;
    std::string catalog;
    std::string subzones;
    std::string out = "out";
    bool operator==(const Paths&) const = default;
  } paths;

  struct Run {
    int threads = 1;
    bool operator==(const Run&) const = default;
  } run;

  void validate() const;
  std::string dump_toml() const;
  static PipelineConfig parse_toml(const std::string& text);
  static PipelineConfig load_toml(const std::string& path);

  bool operator==(const PipelineConfig&) const = default;
};

}  // namespace mobiscope

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mobiscope/ingest.hpp"
#include "mobiscope/labeling.hpp"

namespace mobiscope {

enum class Archetype { HomeBody, ShortTripper, LongTripper };

const char* to_string(Archetype a);

struct SynthSpec {
  uint64_t seed = 7;
  int n_homebody = 10;
  int n_short = 10;
  int n_long = 10;
  int days = 60;
  double working_fraction = 0.7;
  // Pearson correlation to build in between commute distance and the mean
  // workday excursion distance of working users.
  double target_r = 0.75;
  double gps_jitter_m = 12.0;
  double schedule_jitter_min = 8.0;
  int tz_offset_minutes = 480;
  int64_t start_day = 18631;  // 2021-01-04, a Monday
  // Study region; roughly a metropolitan bounding box.
  double min_lat = 1.0, max_lat = 1.9;
  double min_lon = 103.2, max_lon = 104.4;

  void validate() const;
};

struct TruthUser {
  std::string user_id;
  Archetype archetype = Archetype::HomeBody;
  bool working = false;
  GeoPoint home;
  std::optional<GeoPoint> work;
  std::optional<double> home_work_km;
  // Planned mean workday excursion distance (working users only).
  std::optional<double> mean_excursion_km;
};

struct SynthOutput {
  SynthSpec spec;
  std::vector<GpsFix> fixes;  // time-sorted per user, users interleaved by id
  std::vector<TruthUser> truth;
  std::vector<CatalogEntry> catalog;
  // Square grid of subzones covering the region with margin.
  double grid_origin_lat = 0.0, grid_origin_lon = 0.0;
  double grid_cell_deg = 0.01;
  int grid_rows = 0, grid_cols = 0;

  SubzoneMap subzone_map() const;
  LabelCatalog label_catalog() const { return LabelCatalog(catalog); }
  std::string subzones_geojson() const;
};

SynthOutput generate_synthetic(const SynthSpec& spec);

// Writes fixes.csv, catalog.csv, subzones.geojson and ground_truth.json.
void write_synth_dataset(const SynthOutput& out, const std::string& dir);

}  // namespace mobiscope

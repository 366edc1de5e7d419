#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mobiscope/analysis.hpp"
#include "mobiscope/cluster.hpp"
#include "mobiscope/config.hpp"
#include "mobiscope/features.hpp"
#include "mobiscope/ingest.hpp"
#include "mobiscope/labeling.hpp"
#include "mobiscope/poi.hpp"

namespace mobiscope {

// Everything derived for one accepted user, kept in memory so stages and
// tests can share one code path with the file-based CLI.
struct UserArtifacts {
  std::string user_id;
  ValidityReport validity;
  std::vector<Poi> pois;
  std::vector<Visit> visits;
  UserProfile profile;
  std::vector<DayRecord> days;
};

// Stay points through day segmentation for one user; labeling is applied when
// a catalog is given, subzones when a map is given.
UserArtifacts process_user(const UserDataset& ds, const PipelineConfig& cfg,
                           const LabelCatalog* catalog, const SubzoneMap* subzones);

struct DayTypeFeatures {
  DayType day_type = DayType::Offday;
  std::vector<std::string> user_ids;
  std::vector<std::vector<double>> vectors;       // 20-dim, aligned with user_ids
  std::vector<std::string> excluded_user_ids;     // degenerate for this day type
};

// Feature vectors for one day type. Workday covers working users only; Offday
// covers every user. Users whose day type has no trips or no days are listed
// as excluded instead of getting a vector.
DayTypeFeatures population_features(const std::vector<UserArtifacts>& users,
                                    const PipelineConfig& cfg, DayType day_type);

struct DayTypeModel {
  DayTypeFeatures features;
  ClusterModel model;
  SseCurve curve;
};

DayTypeModel cluster_day_type(const std::vector<UserArtifacts>& users,
                              const PipelineConfig& cfg, DayType day_type);

// Median workday DCD (nonzero days) against commute distance across working
// users; users without a workday DCD above the snap are left out.
Correlation commute_correlation(const std::vector<UserArtifacts>& users,
                                const PipelineConfig& cfg,
                                std::vector<std::string>* used_ids = nullptr);

// File-based stages backing the CLI subcommands. Each writes into out_dir and
// returns the paths it created (relative to out_dir).
std::vector<std::string> stage_ingest(const PipelineConfig& cfg,
                                      const std::vector<std::string>& inputs,
                                      const std::string& out_dir);
std::vector<std::string> stage_pois(const PipelineConfig& cfg, const std::string& users_dir,
                                    const std::string& out_dir);
std::vector<std::string> stage_label(const PipelineConfig& cfg, const std::string& pois_dir,
                                     const std::string& out_dir);
std::vector<std::string> stage_features(const PipelineConfig& cfg,
                                        const std::string& labeled_dir,
                                        const std::string& out_csv);
std::vector<std::string> stage_cluster(const PipelineConfig& cfg,
                                       const std::string& features_csv,
                                       const std::string& out_json);
std::vector<std::string> stage_analyze(const PipelineConfig& cfg,
                                       const std::string& labeled_dir,
                                       const std::string& models_json,
                                       const std::string& out_dir);

// Runs every stage under cfg.paths.out and writes manifest.json with a sha256
// per produced file. On a stage failure the partial outputs move to
// out/failed/ and the error is rethrown with the stage name attached.
std::string run_all(const PipelineConfig& cfg);

std::string sha256_file(const std::string& path);
std::string sha256_bytes(const void* data, size_t len);

}  // namespace mobiscope

#include "mobiscope/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mobiscope/timeutil.hpp"

namespace fs = std::filesystem;

namespace mobiscope {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write " + path);
  out << content;
  if (!out) fail(errc::io_error, "short write to " + path);
}

std::string safe_filename(const std::string& user_id) {
  std::string s;
  for (char c : user_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    s.push_back(ok ? c : '_');
  }
  if (s.empty()) s = "_";
  return s;
}

std::vector<std::string> sorted_json_files(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(errc::io_error, dir + " is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json" &&
        name != "validity_report.json") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Run fn(i) for i in [0, n) on the configured number of threads. Results must
// be written into pre-sized slots so the order never depends on scheduling.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
  if (threads == 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads == 0) threads = 1;
  }
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(threads, static_cast<int>(n));
  pool.reserve(static_cast<size_t>(count));
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

nlohmann::json profile_json(const UserProfile& profile) {
  nlohmann::json j;
  j["user_id"] = profile.user_id;
  j["home_poi"] = profile.home_poi;
  j["home_fallback"] = profile.home_fallback;
  if (profile.work_poi) {
    j["work_poi"] = *profile.work_poi;
    j["home_work_km"] = *profile.home_work_km;
  } else {
    j["work_poi"] = nullptr;
    j["home_work_km"] = nullptr;
  }
  return j;
}

nlohmann::json pois_json(const std::vector<Poi>& pois) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Poi& p : pois) {
    nlohmann::json j;
    j["poi_id"] = p.poi_id;
    j["lat"] = p.centroid.lat;
    j["lon"] = p.centroid.lon;
    j["stay_count"] = p.stay_count;
    if (p.subzone) {
      j["subzone"] = *p.subzone;
    } else {
      j["subzone"] = nullptr;
    }
    if (p.category) {
      j["category"] = std::string(to_string(*p.category));
    } else {
      j["category"] = nullptr;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::json visits_json(const std::vector<Visit>& visits) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Visit& v : visits) {
    arr.push_back({{"poi_id", v.poi_id}, {"arrival", v.arrival}, {"departure", v.departure}});
  }
  return arr;
}

struct UserPoiFile {
  UserProfile profile;
  std::vector<Poi> pois;
  std::vector<Visit> visits;
};

UserPoiFile parse_poi_file(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(errc::corrupt_input, path + ": " + e.what());
  }
  UserPoiFile out;
  try {
    out.profile.user_id = doc.at("user_id").get<std::string>();
    out.profile.home_poi = doc.at("home_poi").get<int>();
    out.profile.home_fallback = doc.at("home_fallback").get<bool>();
    if (!doc.at("work_poi").is_null()) {
      out.profile.work_poi = doc["work_poi"].get<int>();
      out.profile.home_work_km = doc.at("home_work_km").get<double>();
    }
    for (const auto& pj : doc.at("pois")) {
      Poi p;
      p.poi_id = pj.at("poi_id").get<int>();
      p.centroid.lat = pj.at("lat").get<double>();
      p.centroid.lon = pj.at("lon").get<double>();
      p.stay_count = pj.at("stay_count").get<int>();
      if (!pj.at("subzone").is_null()) p.subzone = pj["subzone"].get<std::string>();
      if (!pj.at("category").is_null()) {
        auto cat = category_from_string(pj["category"].get<std::string>());
        if (!cat) fail(errc::corrupt_input, path + ": unknown category");
        p.category = *cat;
      }
      out.pois.push_back(std::move(p));
    }
    for (const auto& vj : doc.at("visits")) {
      out.visits.push_back({vj.at("poi_id").get<int>(), vj.at("arrival").get<int64_t>(),
                            vj.at("departure").get<int64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(errc::corrupt_input, path + ": " + e.what());
  }
  return out;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Feature vector for one user and day type, or nullopt when that day type is
// degenerate for the user (no days or no trips).
std::optional<FeatureVector> user_feature_vector(const UserProfile& profile,
                                                 const std::vector<Poi>& pois,
                                                 const std::vector<DayRecord>& days,
                                                 const PipelineConfig& cfg,
                                                 DayType day_type) {
  std::vector<DayRecord> typed;
  for (const DayRecord& d : days) {
    if (d.day_type == day_type) typed.push_back(d);
  }
  if (typed.empty()) return std::nullopt;
  const std::vector<Trip> trips = extract_trips(typed, pois);
  if (trips.empty()) return std::nullopt;

  const ThresholdScheme od_scheme =
      ThresholdScheme::od(day_type, day_type == DayType::Workday
                                        ? cfg.features.od_workday_edges_km
                                        : cfg.features.od_offday_edges_km);
  const OdMatrix od = od_matrix(trips, profile, pois, od_scheme, day_type);
  const DcdSeries series = dcd_series(typed, profile, pois, day_type);
  const ThresholdScheme dcd_scheme = ThresholdScheme::dcd(day_type, cfg.features.dcd_edges_km);
  const DcdFeatures dcd = dcd_features(series, dcd_scheme, cfg.features.zero_snap_m);
  return build_feature_vector(profile.user_id, day_type, od, dcd,
                              static_cast<int64_t>(typed.size()));
}

nlohmann::json model_json(const DayTypeModel& m) {
  nlohmann::json j;
  j["day_type"] = to_string(m.features.day_type);
  j["k"] = m.model.k;
  j["seed"] = m.model.seed;
  j["sse"] = m.model.sse;
  j["iterations"] = m.model.iterations;
  j["centroids"] = m.model.centroids;
  nlohmann::json assignments;
  for (size_t i = 0; i < m.features.user_ids.size(); ++i) {
    assignments[m.features.user_ids[i]] = m.model.assignments[i];
  }
  j["assignments"] = std::move(assignments);
  j["excluded"] = m.features.excluded_user_ids;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [k, sse] : m.curve.points) curve.push_back({k, sse});
  j["sse_curve"] = std::move(curve);
  if (m.curve.points.size() >= 3) j["suggested_k"] = suggest_k(m.curve);
  return j;
}

}  // namespace

UserArtifacts process_user(const UserDataset& ds, const PipelineConfig& cfg,
                           const LabelCatalog* catalog, const SubzoneMap* subzones) {
  UserArtifacts a;
  a.user_id = ds.user_id;
  ValidityParams vp{cfg.ingest.min_valid_days, cfg.ingest.min_coverage,
                    cfg.ingest.valid_day_hours, cfg.ingest.tz_offset_minutes};
  a.validity = validity_filter(ds, vp);

  StayParams sp{cfg.poi.stay_dist_m, cfg.poi.stay_time_min, cfg.poi.stay_gap_min};
  const std::vector<StayPoint> stays = detect_stay_points(ds.fixes, sp);
  PoiResult pr = merge_to_pois(stays, cfg.poi.merge_m);
  a.pois = std::move(pr.pois);
  a.visits = std::move(pr.visits);

  if (subzones && !subzones->empty()) {
    for (Poi& p : a.pois) p.subzone = subzones->locate(p.centroid);
  }
  if (catalog) {
    label_all(a.pois, *catalog, cfg.labeling.max_m);
  }

  HomeWorkParams hw{cfg.poi.home_window_start_h, cfg.poi.home_window_end_h,
                    cfg.poi.work_window_start_h, cfg.poi.work_window_end_h,
                    cfg.poi.work_presence_ratio, cfg.ingest.tz_offset_minutes};
  a.profile = detect_home_work(ds.user_id, a.pois, a.visits, hw);
  a.days = segment_days(a.visits, a.profile, cfg.ingest.tz_offset_minutes);
  return a;
}

DayTypeFeatures population_features(const std::vector<UserArtifacts>& users,
                                    const PipelineConfig& cfg, DayType day_type) {
  DayTypeFeatures out;
  out.day_type = day_type;
  for (const UserArtifacts& a : users) {
    if (day_type == DayType::Workday && !a.profile.working()) continue;
    const auto fv = user_feature_vector(a.profile, a.pois, a.days, cfg, day_type);
    if (!fv) {
      out.excluded_user_ids.push_back(a.user_id);
      continue;
    }
    out.user_ids.push_back(a.user_id);
    out.vectors.emplace_back(fv->values.begin(), fv->values.end());
  }
  return out;
}

DayTypeModel cluster_day_type(const std::vector<UserArtifacts>& users,
                              const PipelineConfig& cfg, DayType day_type) {
  DayTypeModel out;
  out.features = population_features(users, cfg, day_type);
  const size_t n = out.features.vectors.size();
  if (n == 0) {
    fail(errc::empty_input,
         std::string("cluster_day_type: no feature vectors for ") + to_string(day_type));
  }
  KmeansParams kp;
  kp.k = std::min<int>(cfg.cluster.k, static_cast<int>(n));
  kp.seed = cfg.cluster.seed;
  kp.restarts = cfg.cluster.restarts;
  kp.max_iter = cfg.cluster.max_iter;
  kp.tol = cfg.cluster.tol;
  out.model = kmeans(out.features.vectors, kp);
  const int k_max = std::min<int>(cfg.cluster.k_scan_max, static_cast<int>(n));
  if (cfg.cluster.k_scan_min <= k_max) {
    out.curve = sse_curve(out.features.vectors, cfg.cluster.k_scan_min, k_max,
                          cfg.cluster.seed, cfg.cluster.restarts);
  }
  return out;
}

Correlation commute_correlation(const std::vector<UserArtifacts>& users,
                                const PipelineConfig& cfg,
                                std::vector<std::string>* used_ids) {
  std::vector<double> hw, med;
  std::vector<std::string> ids;
  for (const UserArtifacts& a : users) {
    if (!a.profile.working() || !a.profile.home_work_km) continue;
    const DcdSeries series = dcd_series(a.days, a.profile, a.pois, DayType::Workday);
    const auto m = median_nonzero(series, cfg.features.zero_snap_m);
    if (!m) continue;
    hw.push_back(*a.profile.home_work_km);
    med.push_back(*m);
    ids.push_back(a.user_id);
  }
  if (used_ids) *used_ids = ids;
  return pearson_r(hw, med, cfg.analysis.permutations, cfg.cluster.seed);
}

std::vector<std::string> stage_ingest(const PipelineConfig& cfg,
                                      const std::vector<std::string>& inputs,
                                      const std::string& out_dir) {
  if (inputs.empty()) fail(errc::parameter, "ingest: no input files");
  const FixFormat format =
      cfg.ingest.format == "jsonl" ? FixFormat::jsonl : FixFormat::csv;
  std::vector<GpsFix> fixes;
  size_t error_count = 0;
  for (const std::string& path : inputs) {
    ParseResult r = parse_fixes_file(path, format);
    error_count += r.errors.size();
    std::move(r.fixes.begin(), r.fixes.end(), std::back_inserter(fixes));
  }
  std::vector<UserDataset> datasets = group_users(std::move(fixes), cfg.ingest.overlap_tolerance_s);

  ValidityParams vp{cfg.ingest.min_valid_days, cfg.ingest.min_coverage,
                    cfg.ingest.valid_day_hours, cfg.ingest.tz_offset_minutes};
  std::vector<std::string> written;
  nlohmann::json report;
  report["params"] = {{"min_valid_days", vp.min_valid_days},
                      {"min_coverage", vp.min_coverage},
                      {"valid_day_hours", vp.valid_day_hours},
                      {"tz_offset_minutes", vp.tz_offset_minutes}};
  report["malformed_rows"] = error_count;
  report["users"] = nlohmann::json::array();
  for (const UserDataset& ds : datasets) {
    const ValidityReport v = validity_filter(ds, vp);
    report["users"].push_back({{"user_id", ds.user_id},
                               {"recording_days", v.recording_days},
                               {"valid_days", v.valid_days},
                               {"coverage_ratio", v.coverage_ratio},
                               {"accepted", v.accepted}});
    if (!v.accepted) continue;
    nlohmann::json uj;
    uj["user_id"] = ds.user_id;
    uj["validity"] = {{"recording_days", v.recording_days},
                      {"valid_days", v.valid_days},
                      {"coverage_ratio", v.coverage_ratio},
                      {"accepted", true}};
    nlohmann::json fixes_arr = nlohmann::json::array();
    for (const GpsFix& f : ds.fixes) {
      fixes_arr.push_back({f.point.lat, f.point.lon, f.start_epoch_s, f.end_epoch_s});
    }
    uj["fixes"] = std::move(fixes_arr);
    const std::string rel = safe_filename(ds.user_id) + ".json";
    write_file(out_dir + "/" + rel, uj.dump(2) + "\n");
    written.push_back(rel);
  }
  write_file(out_dir + "/validity_report.json", report.dump(2) + "\n");
  written.push_back("validity_report.json");
  return written;
}

std::vector<std::string> stage_pois(const PipelineConfig& cfg, const std::string& users_dir,
                                    const std::string& out_dir) {
  const std::vector<std::string> files = sorted_json_files(users_dir);
  if (files.empty()) fail(errc::empty_input, "pois: no user files in " + users_dir);
  std::vector<std::string> written(files.size());
  parallel_for(files.size(), cfg.run.threads, [&](size_t i) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(files[i]));
    } catch (const nlohmann::json::exception& e) {
      fail(errc::corrupt_input, files[i] + ": " + e.what());
    }
    UserDataset ds;
    try {
      ds.user_id = doc.at("user_id").get<std::string>();
      for (const auto& fj : doc.at("fixes")) {
        ds.fixes.push_back({ds.user_id,
                            {fj.at(0).get<double>(), fj.at(1).get<double>()},
                            fj.at(2).get<int64_t>(),
                            fj.at(3).get<int64_t>()});
      }
    } catch (const nlohmann::json::exception& e) {
      fail(errc::corrupt_input, files[i] + ": " + e.what());
    }

    StayParams sp{cfg.poi.stay_dist_m, cfg.poi.stay_time_min, cfg.poi.stay_gap_min};
    PoiResult pr = merge_to_pois(detect_stay_points(ds.fixes, sp), cfg.poi.merge_m);
    HomeWorkParams hw{cfg.poi.home_window_start_h, cfg.poi.home_window_end_h,
                      cfg.poi.work_window_start_h, cfg.poi.work_window_end_h,
                      cfg.poi.work_presence_ratio, cfg.ingest.tz_offset_minutes};
    const UserProfile profile = detect_home_work(ds.user_id, pr.pois, pr.visits, hw);

    nlohmann::json out = profile_json(profile);
    out["pois"] = pois_json(pr.pois);
    out["visits"] = visits_json(pr.visits);
    const std::string rel = safe_filename(ds.user_id) + ".json";
    write_file(out_dir + "/" + rel, out.dump(2) + "\n");
    written[i] = rel;
  });
  return written;
}

std::vector<std::string> stage_label(const PipelineConfig& cfg, const std::string& pois_dir,
                                     const std::string& out_dir) {
  const std::vector<std::string> files = sorted_json_files(pois_dir);
  if (files.empty()) fail(errc::empty_input, "label: no POI files in " + pois_dir);

  LabelCatalog catalog;
  if (!cfg.paths.catalog.empty()) {
    catalog = LabelCatalog::load_csv(cfg.paths.catalog);
  }
  if (catalog.empty()) {
    std::cerr << "label: empty catalog, every POI stays unlabeled\n";
  }
  SubzoneMap subzones;
  if (!cfg.paths.subzones.empty()) {
    subzones = SubzoneMap::load_geojson(cfg.paths.subzones, cfg.labeling.zone_id_property);
  }

  std::vector<std::string> written(files.size());
  parallel_for(files.size(), cfg.run.threads, [&](size_t i) {
    UserPoiFile f = parse_poi_file(files[i]);
    if (!subzones.empty()) {
      for (Poi& p : f.pois) p.subzone = subzones.locate(p.centroid);
    }
    label_all(f.pois, catalog, cfg.labeling.max_m);
    nlohmann::json out = profile_json(f.profile);
    out["pois"] = pois_json(f.pois);
    out["visits"] = visits_json(f.visits);
    const std::string rel = safe_filename(f.profile.user_id) + ".json";
    write_file(out_dir + "/" + rel, out.dump(2) + "\n");
    written[i] = rel;
  });
  return written;
}

std::vector<std::string> stage_features(const PipelineConfig& cfg,
                                        const std::string& labeled_dir,
                                        const std::string& out_csv) {
  const std::vector<std::string> files = sorted_json_files(labeled_dir);
  if (files.empty()) fail(errc::empty_input, "features: no labeled files in " + labeled_dir);
  std::string csv = "user_id,day_type";
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      csv += ",od_" + std::to_string(r) + std::to_string(c);
    }
  }
  for (int b = 0; b < 4; ++b) csv += ",dcd_" + std::to_string(b);
  csv += "\n";

  for (const std::string& path : files) {
    const UserPoiFile f = parse_poi_file(path);
    const std::vector<DayRecord> days =
        segment_days(f.visits, f.profile, cfg.ingest.tz_offset_minutes);
    for (DayType day_type : {DayType::Workday, DayType::Offday}) {
      if (day_type == DayType::Workday && !f.profile.working()) continue;
      const auto fv = user_feature_vector(f.profile, f.pois, days, cfg, day_type);
      if (!fv) continue;
      csv += fv->user_id;
      csv += ",";
      csv += to_string(day_type);
      for (double v : fv->values) {
        csv += ",";
        csv += fmt6(v);
      }
      csv += "\n";
    }
  }
  write_file(out_csv, csv);
  return {fs::path(out_csv).filename().string()};
}

namespace {

struct FeatureTable {
  DayTypeFeatures workday;
  DayTypeFeatures offday;
};

FeatureTable read_features_csv(const std::string& path) {
  FeatureTable table;
  table.workday.day_type = DayType::Workday;
  table.offday.day_type = DayType::Offday;
  std::istringstream in(read_file(path));
  std::string line;
  bool header = true;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
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
    if (fields.size() != 22) {
      fail(errc::corrupt_input,
           path + " line " + std::to_string(line_no) + ": expected 22 fields");
    }
    std::vector<double> values(20);
    try {
      for (size_t i = 0; i < 20; ++i) values[i] = std::stod(fields[i + 2]);
    } catch (const std::exception&) {
      fail(errc::corrupt_input, path + " line " + std::to_string(line_no) + ": bad number");
    }
    DayTypeFeatures* target = nullptr;
    if (fields[1] == "Workday") {
      target = &table.workday;
    } else if (fields[1] == "Offday") {
      target = &table.offday;
    } else {
      fail(errc::corrupt_input,
           path + " line " + std::to_string(line_no) + ": bad day_type " + fields[1]);
    }
    target->user_ids.push_back(fields[0]);
    target->vectors.push_back(std::move(values));
  }
  return table;
}

nlohmann::json cluster_features(const PipelineConfig& cfg, DayTypeFeatures features) {
  if (features.vectors.empty()) return nullptr;
  DayTypeModel m;
  m.features = std::move(features);
  KmeansParams kp;
  kp.k = std::min<int>(cfg.cluster.k, static_cast<int>(m.features.vectors.size()));
  kp.seed = cfg.cluster.seed;
  kp.restarts = cfg.cluster.restarts;
  kp.max_iter = cfg.cluster.max_iter;
  kp.tol = cfg.cluster.tol;
  m.model = kmeans(m.features.vectors, kp);
  const int k_max = std::min<int>(cfg.cluster.k_scan_max,
                                  static_cast<int>(m.features.vectors.size()));
  if (cfg.cluster.k_scan_min <= k_max) {
    m.curve = sse_curve(m.features.vectors, cfg.cluster.k_scan_min, k_max, cfg.cluster.seed,
                        cfg.cluster.restarts);
  }
  return model_json(m);
}

}  // namespace

std::vector<std::string> stage_cluster(const PipelineConfig& cfg,
                                       const std::string& features_csv,
                                       const std::string& out_json) {
  FeatureTable table = read_features_csv(features_csv);
  if (table.workday.vectors.empty() && table.offday.vectors.empty()) {
    fail(errc::empty_input, "cluster: no feature vectors in " + features_csv);
  }
  nlohmann::json out;
  out["workday"] = cluster_features(cfg, std::move(table.workday));
  out["offday"] = cluster_features(cfg, std::move(table.offday));
  write_file(out_json, out.dump(2) + "\n");
  return {fs::path(out_json).filename().string()};
}

namespace {

std::string heatmap_csv_rows(const HeatmapGrid& grid, const ThresholdScheme& scheme) {
  std::string s;
  for (int r = 0; r < ThresholdScheme::kBins; ++r) {
    for (int c = 0; c < kCategoryCount; ++c) {
      s += std::to_string(grid.cluster_id);
      s += ",";
      s += to_string(grid.kind);
      s += ",";
      s += scheme.bin_label(r);
      s += ",";
      s += kCategoryNames[static_cast<size_t>(c)];
      s += ",";
      s += fmt6(grid.cells[static_cast<size_t>(r)][static_cast<size_t>(c)]);
      s += "\n";
    }
  }
  return s;
}

nlohmann::json violin_json(const ViolinExport& ve) {
  nlohmann::json users = nlohmann::json::array();
  for (const ViolinUser& u : ve.users) {
    nlohmann::json ju;
    ju["user_id"] = u.user_id;
    ju["working"] = u.working;
    if (u.home_work_km) {
      ju["home_work_km"] = *u.home_work_km;
    } else {
      ju["home_work_km"] = nullptr;
    }
    if (u.median_km) {
      ju["median_km"] = *u.median_km;
    } else {
      ju["median_km"] = nullptr;
    }
    ju["values"] = u.values;
    users.push_back(std::move(ju));
  }
  return users;
}

struct AnalyzeInputs {
  std::vector<UserPoiFile> users;
  std::map<std::string, size_t> by_id;
  std::map<std::string, std::vector<DayRecord>> days;
};

void analyze_day_type(const PipelineConfig& cfg, const AnalyzeInputs& inputs,
                      const nlohmann::json& model, DayType day_type,
                      const std::string& out_dir, std::vector<std::string>& written) {
  if (model.is_null()) return;
  const int k = model.at("k").get<int>();
  std::map<std::string, int> assignment;
  for (const auto& [uid, cluster] : model.at("assignments").items()) {
    assignment[uid] = cluster.get<int>();
  }

  const ThresholdScheme scheme =
      ThresholdScheme::od(day_type, day_type == DayType::Workday
                                        ? cfg.features.od_workday_edges_km
                                        : cfg.features.od_offday_edges_km);
  const FrequencyUnit unit = cfg.analysis.frequency_unit == "pois" ? FrequencyUnit::Pois
                                                                   : FrequencyUnit::Visits;
  const std::string tag = day_type == DayType::Workday ? "workday" : "offday";

  std::string heatmaps = "cluster_id,kind,row_bin,category,value\n";
  nlohmann::json violins;
  violins["day_type"] = to_string(day_type);
  violins["clusters"] = nlohmann::json::array();
  for (int cluster = 0; cluster < k; ++cluster) {
    std::vector<UserCellCounts> counts;
    std::vector<ViolinInput> violin_inputs;
    for (const auto& [uid, assigned] : assignment) {
      if (assigned != cluster) continue;
      auto it = inputs.by_id.find(uid);
      if (it == inputs.by_id.end()) {
        fail(errc::corrupt_input, "analyze: model user " + uid + " not in labeled data");
      }
      const UserPoiFile& f = inputs.users[it->second];
      const auto& days = inputs.days.at(uid);
      counts.push_back(
          bin_labeled_visits(uid, days, f.pois, f.profile, scheme, day_type, unit));
      violin_inputs.push_back({f.profile, dcd_series(days, f.profile, f.pois, day_type)});
    }
    if (counts.empty()) continue;
    heatmaps += heatmap_csv_rows(user_commonality(counts, cluster), scheme);
    bool any_labeled = false;
    for (const UserCellCounts& c : counts) any_labeled = any_labeled || c.total > 0;
    if (any_labeled) {
      heatmaps += heatmap_csv_rows(average_frequency(counts, cluster), scheme);
    }
    const ViolinExport ve =
        violin_export(violin_inputs, day_type, cfg.features.zero_snap_m);
    violins["clusters"].push_back(
        {{"cluster_id", cluster}, {"users", violin_json(ve)}});
  }
  write_file(out_dir + "/" + tag + "_heatmaps.csv", heatmaps);
  written.push_back(tag + "_heatmaps.csv");
  write_file(out_dir + "/" + tag + "_violins.json", violins.dump(2) + "\n");
  written.push_back(tag + "_violins.json");
}

}  // namespace

std::vector<std::string> stage_analyze(const PipelineConfig& cfg,
                                       const std::string& labeled_dir,
                                       const std::string& models_json,
                                       const std::string& out_dir) {
  AnalyzeInputs inputs;
  for (const std::string& path : sorted_json_files(labeled_dir)) {
    UserPoiFile f = parse_poi_file(path);
    const std::string uid = f.profile.user_id;
    inputs.days[uid] = segment_days(f.visits, f.profile, cfg.ingest.tz_offset_minutes);
    inputs.by_id[uid] = inputs.users.size();
    inputs.users.push_back(std::move(f));
  }
  if (inputs.users.empty()) fail(errc::empty_input, "analyze: no labeled users");

  nlohmann::json models;
  try {
    models = nlohmann::json::parse(read_file(models_json));
  } catch (const nlohmann::json::exception& e) {
    fail(errc::corrupt_input, models_json + ": " + e.what());
  }

  std::vector<std::string> written;
  analyze_day_type(cfg, inputs, models.value("workday", nlohmann::json()), DayType::Workday,
                   out_dir, written);
  analyze_day_type(cfg, inputs, models.value("offday", nlohmann::json()), DayType::Offday,
                   out_dir, written);

  // Commute distance vs the median nonzero workday excursion distance.
  std::vector<double> hw, med;
  std::vector<std::string> ids;
  for (const UserPoiFile& f : inputs.users) {
    if (!f.profile.working() || !f.profile.home_work_km) continue;
    const DcdSeries series =
        dcd_series(inputs.days.at(f.profile.user_id), f.profile, f.pois, DayType::Workday);
    const auto m = median_nonzero(series, cfg.features.zero_snap_m);
    if (!m) continue;
    hw.push_back(*f.profile.home_work_km);
    med.push_back(*m);
    ids.push_back(f.profile.user_id);
  }
  nlohmann::json corr;
  corr["n"] = ids.size();
  corr["user_ids"] = ids;
  corr["permutations"] = cfg.analysis.permutations;
  corr["seed"] = cfg.cluster.seed;
  if (ids.size() >= 3) {
    try {
      const Correlation c = pearson_r(hw, med, cfg.analysis.permutations, cfg.cluster.seed);
      corr["r"] = c.r;
      corr["p"] = c.p;
    } catch (const Error& e) {
      corr["r"] = nullptr;
      corr["p"] = nullptr;
      corr["reason"] = e.what();
    }
  } else {
    corr["r"] = nullptr;
    corr["p"] = nullptr;
    corr["reason"] = "fewer than 3 users with a commute and nonzero excursion days";
  }
  write_file(out_dir + "/correlation.json", corr.dump(2) + "\n");
  written.push_back("correlation.json");

  if (cfg.analysis.emit_plot_specs) {
    nlohmann::json spec;
    spec["heatmaps"] = {{"commonality", {{"color_cap", kCommonalityColorCap}}},
                        {"frequency", {{"color_cap", kFrequencyColorCap}}},
                        {"rows_bottom_up", true}};
    spec["violins"] = {{"zero_days_excluded", true}};
    write_file(out_dir + "/plot_specs.json", spec.dump(2) + "\n");
    written.push_back("plot_specs.json");
  }
  return written;
}

std::string sha256_bytes(const void* data, size_t len) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  if (EVP_Digest(data, len, md, &md_len, EVP_sha256(), nullptr) != 1) {
    fail(errc::io_error, "sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  const std::string data = read_file(path);
  return sha256_bytes(data.data(), data.size());
}

namespace {

void write_manifest(const std::string& out_dir) {
  std::vector<std::string> rel_paths;
  for (auto it = fs::recursive_directory_iterator(out_dir);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && it->path().filename() == "failed") {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    std::string rel = fs::relative(it->path(), out_dir).generic_string();
    if (rel == "manifest.json") continue;
    rel_paths.push_back(std::move(rel));
  }
  std::sort(rel_paths.begin(), rel_paths.end());
  nlohmann::json manifest;
  manifest["files"] = nlohmann::json::array();
  for (const std::string& rel : rel_paths) {
    manifest["files"].push_back(
        {{"path", rel}, {"sha256", sha256_file(out_dir + "/" + rel)}});
  }
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

std::string run_all(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.paths.fixes.empty()) fail(errc::config, "run: paths.fixes is empty");
  const std::string out = cfg.paths.out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(errc::io_error, "cannot create " + out);

  const char* stage_name = "ingest";
  try {
    stage_ingest(cfg, cfg.paths.fixes, out + "/users");
    stage_name = "pois";
    stage_pois(cfg, out + "/users", out + "/pois");
    stage_name = "label";
    stage_label(cfg, out + "/pois", out + "/labeled");
    stage_name = "features";
    stage_features(cfg, out + "/labeled", out + "/features/features.csv");
    stage_name = "cluster";
    stage_cluster(cfg, out + "/features/features.csv", out + "/cluster/models.json");
    stage_name = "analyze";
    stage_analyze(cfg, out + "/labeled", out + "/cluster/models.json", out + "/analysis");
    stage_name = "manifest";
    write_manifest(out);
  } catch (const Error& e) {
    // Preserve whatever was produced for debugging, out of the way of a
    // rerun's manifest.
    const std::string failed = out + "/failed";
    fs::create_directories(failed, ec);
    for (const auto& entry : fs::directory_iterator(out)) {
      if (entry.path().filename() == "failed") continue;
      fs::rename(entry.path(), failed + "/" + entry.path().filename().string(), ec);
    }
    fail(e.code(), std::string("stage ") + stage_name + ": " + e.what());
  }
  return out;
}

}  // namespace mobiscope

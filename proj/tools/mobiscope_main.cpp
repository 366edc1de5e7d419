#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mobiscope/config.hpp"
#include "mobiscope/pipeline.hpp"
#include "mobiscope/synth.hpp"

namespace {

std::vector<double> parse_edges(const std::string& text) {
  std::vector<double> edges;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) mobiscope::fail(mobiscope::errc::config, "empty edge in '" + text + "'");
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(cur, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != cur.size()) {
      mobiscope::fail(mobiscope::errc::config, "bad edge '" + cur + "' in '" + text + "'");
    }
    edges.push_back(v);
    cur.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return edges;
}

void parse_k_scan(const std::string& text, int& k_min, int& k_max) {
  const size_t colon = text.find(':');
  if (colon == std::string::npos) {
    mobiscope::fail(mobiscope::errc::config, "--k-scan wants MIN:MAX, got '" + text + "'");
  }
  try {
    size_t pos = 0;
    k_min = std::stoi(text.substr(0, colon), &pos);
    if (pos != colon) throw std::invalid_argument("");
    const std::string rest = text.substr(colon + 1);
    k_max = std::stoi(rest, &pos);
    if (pos != rest.size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    mobiscope::fail(mobiscope::errc::config, "--k-scan wants MIN:MAX, got '" + text + "'");
  }
}

void print_written(const std::string& out, const std::vector<std::string>& files) {
  std::cout << "wrote " << files.size() << (files.size() == 1 ? " file" : " files")
            << " under " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPS mobility pipeline: stay points, POIs, day-type features, user clusters"};
  app.require_subcommand(0, 1);

  std::string config_path;
  uint64_t seed = 42;
  int threads = 1;
  std::string global_out;
  bool dump_default = false;
  app.add_option("--config", config_path, "TOML config file");
  auto* seed_opt = app.add_option("--seed", seed, "override every seeded stage");
  auto* threads_opt = app.add_option("--threads", threads, "worker cap for per-user stages");
  auto* global_out_opt = app.add_option("--out", global_out, "output path for the subcommand");
  app.add_flag("--dump-default-config", dump_default, "print the default config as TOML and exit");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse fixes, group per user, validity-filter");
  ingest->fallthrough();
  std::vector<std::string> ingest_inputs;
  std::string ingest_format, ingest_out = "users";
  int ingest_tz = 0, ingest_min_days = 0;
  double ingest_min_cov = 0.0, ingest_day_hours = 0.0;
  int64_t ingest_overlap = 0;
  ingest->add_option("inputs", ingest_inputs, "fix files")->required();
  auto* o_format = ingest->add_option("--format", ingest_format, "csv or jsonl");
  auto* o_tz = ingest->add_option("--tz-offset", ingest_tz, "minutes east of UTC");
  auto* o_min_days = ingest->add_option("--min-valid-days", ingest_min_days, "acceptance floor");
  auto* o_min_cov = ingest->add_option("--min-coverage", ingest_min_cov, "valid/recording floor");
  auto* o_day_hours = ingest->add_option("--valid-day-hours", ingest_day_hours,
                                         "coverage hours for a valid day");
  auto* o_overlap = ingest->add_option("--overlap-tolerance", ingest_overlap,
                                       "seconds of allowed fix overlap");
  auto* o_ingest_out = ingest->add_option("--out", ingest_out, "user directory");

  // pois
  auto* pois = app.add_subcommand("pois", "stay points, POIs, home/work per user");
  pois->fallthrough();
  std::string pois_dir, pois_out = "pois";
  double pois_dist = 0.0, pois_time = 0.0, pois_gap = 0.0, pois_merge = 0.0;
  pois->add_option("users_dir", pois_dir, "ingest output directory")->required();
  auto* o_dist = pois->add_option("--dist-m", pois_dist, "stay radius");
  auto* o_time = pois->add_option("--time-min", pois_time, "stay duration floor");
  auto* o_gap = pois->add_option("--gap-min", pois_gap, "stay merge gap");
  auto* o_merge = pois->add_option("--merge-m", pois_merge, "POI merge radius");
  auto* o_pois_out = pois->add_option("--out", pois_out, "POI directory");

  // label
  auto* label = app.add_subcommand("label", "categories and subzones for POIs");
  label->fallthrough();
  std::string label_dir, label_catalog, label_subzones, label_out = "labeled";
  std::string label_zone_prop;
  double label_max_m = 0.0;
  label->add_option("pois_dir", label_dir, "pois output directory")->required();
  auto* o_catalog = label->add_option("--catalog", label_catalog, "category catalog CSV");
  auto* o_subzones = label->add_option("--subzones", label_subzones, "subzone GeoJSON");
  auto* o_max_m = label->add_option("--max-m", label_max_m, "labeling radius");
  auto* o_zone_prop = label->add_option("--zone-id-property", label_zone_prop,
                                        "GeoJSON property holding the zone id");
  auto* o_label_out = label->add_option("--out", label_out, "labeled directory");

  // features
  auto* features = app.add_subcommand("features", "OD matrix and DCD share features");
  features->fallthrough();
  std::string features_dir, features_out = "features.csv";
  std::string dcd_edges, od_w_edges, od_o_edges;
  double zero_snap = -1.0;
  features->add_option("labeled_dir", features_dir, "label output directory")->required();
  auto* o_dcd_edges = features->add_option("--dcd-edges", dcd_edges, "e.g. 5,15");
  auto* o_odw_edges = features->add_option("--od-workday-edges", od_w_edges, "e.g. 2,8");
  auto* o_odo_edges = features->add_option("--od-offday-edges", od_o_edges, "e.g. 1,5,15");
  auto* o_zero_snap = features->add_option("--zero-snap-m", zero_snap, "zero-distance snap");
  auto* o_features_out = features->add_option("--out", features_out, "feature CSV path");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "k-means models per day type");
  cluster->fallthrough();
  std::string cluster_csv, cluster_out = "model.json", k_scan;
  int cluster_k = 0, cluster_restarts = 0, cluster_max_iter = 0;
  double cluster_tol = -1.0;
  cluster->add_option("features_csv", cluster_csv, "feature CSV")->required();
  auto* o_k = cluster->add_option("--k", cluster_k, "cluster count");
  auto* o_restarts = cluster->add_option("--restarts", cluster_restarts, "k-means restarts");
  auto* o_k_scan = cluster->add_option("--k-scan", k_scan, "SSE curve range MIN:MAX");
  auto* o_max_iter = cluster->add_option("--max-iter", cluster_max_iter, "iteration cap");
  auto* o_tol = cluster->add_option("--tol", cluster_tol, "centroid shift tolerance");
  auto* o_cluster_out = cluster->add_option("--out", cluster_out, "model JSON path");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "heatmaps, violins and the commute correlation");
  analyze->fallthrough();
  std::string analyze_dir, analyze_models, analyze_out = "analysis", analyze_unit;
  int analyze_perms = 0;
  bool plot_specs = false;
  analyze->add_option("labeled_dir", analyze_dir, "label output directory")->required();
  analyze->add_option("--models", analyze_models, "cluster model JSON")->required();
  auto* o_unit = analyze->add_option("--unit", analyze_unit, "frequency unit: visits or pois");
  auto* o_perms = analyze->add_option("--permutations", analyze_perms, "permutation test draws");
  analyze->add_flag("--emit-plot-specs", plot_specs, "also write plot_specs.json");
  auto* o_analyze_out = analyze->add_option("--out", analyze_out, "analysis directory");

  // synth
  auto* synth = app.add_subcommand("synth", "seeded synthetic dataset with ground truth");
  synth->fallthrough();
  mobiscope::SynthSpec synth_spec;
  std::string synth_out = "synth";
  synth->add_option("--homebody", synth_spec.n_homebody, "home-body users");
  synth->add_option("--short", synth_spec.n_short, "short-tripper users");
  synth->add_option("--long", synth_spec.n_long, "long-tripper users");
  synth->add_option("--days", synth_spec.days, "calendar days");
  synth->add_option("--target-r", synth_spec.target_r,
                    "commute/excursion correlation to build in");
  synth->add_option("--working-fraction", synth_spec.working_fraction,
                    "share of users given a work location");
  auto* o_synth_out = synth->add_option("--out", synth_out, "dataset directory");

  // run-all
  auto* run = app.add_subcommand("run-all", "every stage in order plus a hashed manifest");
  run->fallthrough();
  std::vector<std::string> run_inputs;
  std::string run_catalog, run_subzones, run_out;
  run->add_option("inputs", run_inputs, "fix files (default: paths.fixes from the config)");
  auto* o_run_catalog = run->add_option("--catalog", run_catalog, "category catalog CSV");
  auto* o_run_subzones = run->add_option("--subzones", run_subzones, "subzone GeoJSON");
  auto* o_run_out = run->add_option("--out", run_out, "artifact directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (dump_default) {
      std::cout << mobiscope::PipelineConfig{}.dump_toml();
      return 0;
    }

    mobiscope::PipelineConfig cfg;
    if (!config_path.empty()) cfg = mobiscope::PipelineConfig::load_toml(config_path);
    if (seed_opt->count()) cfg.cluster.seed = seed;
    if (threads_opt->count()) cfg.run.threads = threads;

    auto pick_out = [&](const CLI::Option* local, const std::string& local_value,
                        const std::string& fallback) {
      if (local->count()) return local_value;
      if (global_out_opt->count()) return global_out;
      return fallback;
    };

    if (ingest->parsed()) {
      if (o_format->count()) cfg.ingest.format = ingest_format;
      if (o_tz->count()) cfg.ingest.tz_offset_minutes = ingest_tz;
      if (o_min_days->count()) cfg.ingest.min_valid_days = ingest_min_days;
      if (o_min_cov->count()) cfg.ingest.min_coverage = ingest_min_cov;
      if (o_day_hours->count()) cfg.ingest.valid_day_hours = ingest_day_hours;
      if (o_overlap->count()) cfg.ingest.overlap_tolerance_s = ingest_overlap;
      cfg.validate();
      const std::string out = pick_out(o_ingest_out, ingest_out, "users");
      print_written(out, mobiscope::stage_ingest(cfg, ingest_inputs, out));
      return 0;
    }
    if (pois->parsed()) {
      if (o_dist->count()) cfg.poi.stay_dist_m = pois_dist;
      if (o_time->count()) cfg.poi.stay_time_min = pois_time;
      if (o_gap->count()) cfg.poi.stay_gap_min = pois_gap;
      if (o_merge->count()) cfg.poi.merge_m = pois_merge;
      cfg.validate();
      const std::string out = pick_out(o_pois_out, pois_out, "pois");
      print_written(out, mobiscope::stage_pois(cfg, pois_dir, out));
      return 0;
    }
    if (label->parsed()) {
      if (o_catalog->count()) cfg.paths.catalog = label_catalog;
      if (o_subzones->count()) cfg.paths.subzones = label_subzones;
      if (o_max_m->count()) cfg.labeling.max_m = label_max_m;
      if (o_zone_prop->count()) cfg.labeling.zone_id_property = label_zone_prop;
      cfg.validate();
      const std::string out = pick_out(o_label_out, label_out, "labeled");
      print_written(out, mobiscope::stage_label(cfg, label_dir, out));
      return 0;
    }
    if (features->parsed()) {
      if (o_dcd_edges->count()) cfg.features.dcd_edges_km = parse_edges(dcd_edges);
      if (o_odw_edges->count()) cfg.features.od_workday_edges_km = parse_edges(od_w_edges);
      if (o_odo_edges->count()) cfg.features.od_offday_edges_km = parse_edges(od_o_edges);
      if (o_zero_snap->count()) cfg.features.zero_snap_m = zero_snap;
      cfg.validate();
      const std::string out = pick_out(o_features_out, features_out, "features.csv");
      mobiscope::stage_features(cfg, features_dir, out);
      std::cout << "wrote " << out << "\n";
      return 0;
    }
    if (cluster->parsed()) {
      if (o_k->count()) cfg.cluster.k = cluster_k;
      if (o_restarts->count()) cfg.cluster.restarts = cluster_restarts;
      if (o_k_scan->count()) parse_k_scan(k_scan, cfg.cluster.k_scan_min, cfg.cluster.k_scan_max);
      if (o_max_iter->count()) cfg.cluster.max_iter = cluster_max_iter;
      if (o_tol->count()) cfg.cluster.tol = cluster_tol;
      cfg.validate();
      const std::string out = pick_out(o_cluster_out, cluster_out, "model.json");
      mobiscope::stage_cluster(cfg, cluster_csv, out);
      std::cout << "wrote " << out << "\n";
      return 0;
    }
    if (analyze->parsed()) {
      if (o_unit->count()) cfg.analysis.frequency_unit = analyze_unit;
      if (o_perms->count()) cfg.analysis.permutations = analyze_perms;
      if (plot_specs) cfg.analysis.emit_plot_specs = true;
      cfg.validate();
      const std::string out = pick_out(o_analyze_out, analyze_out, "analysis");
      print_written(out, mobiscope::stage_analyze(cfg, analyze_dir, analyze_models, out));
      return 0;
    }
    if (synth->parsed()) {
      if (seed_opt->count()) synth_spec.seed = seed;
      const std::string out = pick_out(o_synth_out, synth_out, "synth");
      const mobiscope::SynthOutput data = mobiscope::generate_synthetic(synth_spec);
      mobiscope::write_synth_dataset(data, out);
      std::cout << "wrote " << out << "/fixes.csv (" << data.fixes.size() << " fixes, "
                << data.truth.size() << " users)\n";
      return 0;
    }
    if (run->parsed()) {
      if (!run_inputs.empty()) cfg.paths.fixes = run_inputs;
      if (o_run_catalog->count()) cfg.paths.catalog = run_catalog;
      if (o_run_subzones->count()) cfg.paths.subzones = run_subzones;
      if (o_run_out->count()) {
        cfg.paths.out = run_out;
      } else if (global_out_opt->count()) {
        cfg.paths.out = global_out;
      }
      const std::string out = mobiscope::run_all(cfg);
      std::cout << "wrote " << out << "/manifest.json\n";
      return 0;
    }

    std::cout << app.help();
    return 0;
  } catch (const mobiscope::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == mobiscope::errc::config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mobiscope/cluster.hpp"
#include "mobiscope/config.hpp"
#include "mobiscope/features.hpp"
#include "mobiscope/geo.hpp"
#include "mobiscope/pipeline.hpp"
#include "mobiscope/synth.hpp"

namespace py = pybind11;

namespace {

bool is_usage_error(mobiscope::errc c) {
  using mobiscope::errc;
  switch (c) {
    case errc::invalid_input:
    case errc::precondition:
    case errc::parameter:
    case errc::shape:
    case errc::config:
      return true;
    default:
      return false;
  }
}

}  // namespace

PYBIND11_MODULE(_mobiscope, m) {
  m.doc() = "GPS mobility analytics core";
  m.attr("__version__") = "0.1.0";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const mobiscope::Error& e) {
      if (is_usage_error(e.code())) {
        PyErr_SetString(PyExc_ValueError, e.what());
      } else {
        PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  m.def(
      "haversine_km",
      [](double lat1, double lon1, double lat2, double lon2) {
        return mobiscope::haversine_km({lat1, lon1}, {lat2, lon2});
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
      "Great-circle distance in km.");

  m.def(
      "radius_of_gyration",
      [](const std::vector<std::pair<double, double>>& points) {
        std::vector<mobiscope::GeoPoint> pts;
        pts.reserve(points.size());
        for (const auto& [lat, lon] : points) pts.push_back({lat, lon});
        return mobiscope::radius_of_gyration(pts);
      },
      py::arg("points"), "RMS distance in km of (lat, lon) points from their mean.");

  m.def(
      "dcd_shares",
      [](const std::vector<double>& values_km, std::pair<double, double> edges_km,
         double zero_snap_m) {
        mobiscope::DcdSeries series;
        series.day_type = mobiscope::DayType::Offday;
        for (size_t i = 0; i < values_km.size(); ++i) {
          series.values.emplace_back(static_cast<int64_t>(i), values_km[i]);
        }
        const auto scheme = mobiscope::ThresholdScheme::dcd(
            mobiscope::DayType::Offday, {edges_km.first, edges_km.second});
        const auto f = mobiscope::dcd_features(series, scheme, zero_snap_m);
        return std::vector<double>(f.shares.begin(), f.shares.end());
      },
      py::arg("values_km"), py::arg("edges_km") = std::make_pair(5.0, 15.0),
      py::arg("zero_snap_m") = 10.0,
      "Share of daily characteristic distances per bin: 0, (0,e1], (e1,e2], beyond.");

  m.def(
      "kmeans",
      [](const std::vector<std::vector<double>>& vectors, int k, uint64_t seed, int restarts) {
        mobiscope::KmeansParams params;
        params.k = k;
        params.seed = seed;
        params.restarts = restarts;
        const mobiscope::ClusterModel model = mobiscope::kmeans(vectors, params);
        py::dict d;
        d["k"] = model.k;
        d["seed"] = model.seed;
        d["sse"] = model.sse;
        d["centroids"] = model.centroids;
        d["assignments"] = model.assignments;
        d["iterations"] = model.iterations;
        return d;
      },
      py::arg("vectors"), py::arg("k") = 3, py::arg("seed") = 42, py::arg("restarts") = 50,
      "Best-of-restarts Lloyd k-means with deterministic seeding.");

  m.def(
      "sse_curve",
      [](const std::vector<std::vector<double>>& vectors, int k_min, int k_max, uint64_t seed,
         int restarts) { return mobiscope::sse_curve(vectors, k_min, k_max, seed, restarts).points; },
      py::arg("vectors"), py::arg("k_min") = 1, py::arg("k_max") = 10, py::arg("seed") = 42,
      py::arg("restarts") = 50, "(k, sse) pairs for an elbow plot.");

  m.def(
      "suggest_k",
      [](const std::vector<std::pair<int, double>>& points) {
        mobiscope::SseCurve curve;
        curve.points = points;
        return mobiscope::suggest_k(curve);
      },
      py::arg("points"), "Elbow pick from (k, sse) pairs.");

  m.def(
      "pearson_r",
      [](const std::vector<double>& x, const std::vector<double>& y, int permutations,
         uint64_t seed) {
        const mobiscope::Correlation c = mobiscope::pearson_r(x, y, permutations, seed);
        return py::make_tuple(c.r, c.p);
      },
      py::arg("x"), py::arg("y"), py::arg("permutations") = 10000, py::arg("seed") = 42,
      "Pearson r with a permutation p-value, returned as (r, p).");

  m.def("adjusted_rand_index", &mobiscope::adjusted_rand_index, py::arg("a"), py::arg("b"),
        "Agreement of two labelings, 1.0 for identical partitions.");

  m.def(
      "generate_synthetic",
      [](const std::string& out_dir, uint64_t seed, int homebody, int short_trippers,
         int long_trippers, int days, double target_r) {
        mobiscope::SynthSpec spec;
        spec.seed = seed;
        spec.n_homebody = homebody;
        spec.n_short = short_trippers;
        spec.n_long = long_trippers;
        spec.days = days;
        spec.target_r = target_r;
        const mobiscope::SynthOutput out = mobiscope::generate_synthetic(spec);
        mobiscope::write_synth_dataset(out, out_dir);
        py::dict d;
        d["dir"] = out_dir;
        d["users"] = out.truth.size();
        d["fixes"] = out.fixes.size();
        d["files"] = std::vector<std::string>{"fixes.csv", "catalog.csv", "subzones.geojson",
                                              "ground_truth.json"};
        return d;
      },
      py::arg("out_dir"), py::arg("seed") = 7, py::arg("homebody") = 10, py::arg("short") = 10,
      py::arg("long") = 10, py::arg("days") = 60, py::arg("target_r") = 0.75,
      "Write a seeded synthetic dataset with ground truth and return a summary.");

  m.def(
      "run_all",
      [](const std::vector<std::string>& fixes, const std::string& out,
         const std::string& catalog, const std::string& subzones, uint64_t seed, int threads) {
        mobiscope::PipelineConfig cfg;
        cfg.paths.fixes = fixes;
        cfg.paths.out = out;
        cfg.paths.catalog = catalog;
        cfg.paths.subzones = subzones;
        cfg.cluster.seed = seed;
        cfg.run.threads = threads;
        const std::string dir = mobiscope::run_all(cfg);
        py::dict d;
        d["out"] = dir;
        d["manifest"] = dir + "/manifest.json";
        return d;
      },
      py::arg("fixes"), py::arg("out"), py::arg("catalog") = "", py::arg("subzones") = "",
      py::arg("seed") = 42, py::arg("threads") = 1,
      "Run every pipeline stage at default settings and write a hashed manifest.");

  m.def("default_config_toml", [] { return mobiscope::PipelineConfig{}.dump_toml(); },
        "The default pipeline configuration as TOML.");
}

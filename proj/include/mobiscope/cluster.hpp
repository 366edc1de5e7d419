#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace mobiscope {

struct KmeansParams {
  int k = 3;
  uint64_t seed = 42;
  int restarts = 50;
  int max_iter = 300;
  double tol = 1e-6;
  bool collect_history = false;
};

struct ClusterModel {
  int k = 0;
  uint64_t seed = 0;
  double sse = 0.0;
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignments;  // one label per input vector
  int iterations = 0;            // of the winning restart
  // Per-restart SSE after each assignment step, when collect_history is set.
  std::vector<std::vector<double>> restart_sse_history;
};

// Lloyd's algorithm with k-means++ seeding, run for the configured number of
// restarts; the lowest-SSE restart wins (ties to the earlier restart). Each
// restart draws from an independent stream of (seed, restart_index), so
// results are reproducible across platforms. Iteration stops only when the
// assignment vector reaches a fixed point; empty clusters are reseeded on the
// point farthest from its centroid.
ClusterModel kmeans(const std::vector<std::vector<double>>& vectors,
                    const KmeansParams& params);

struct SseCurve {
  std::vector<std::pair<int, double>> points;  // (k, sse), k ascending
};

SseCurve sse_curve(const std::vector<std::vector<double>>& vectors, int k_min, int k_max,
                   uint64_t seed, int restarts = 50);

// Elbow pick: the interior curve point farthest (perpendicular) from the
// chord between the first and last points after normalizing both axes to
// [0,1]; ties resolve to the smaller k.
int suggest_k(const SseCurve& curve);

struct Correlation {
  double r = 0.0;
  double p = 1.0;
  int n = 0;
};

// Pearson correlation with a permutation test: p = (#{|r_perm| >= |r|} + 1) /
// (permutations + 1).
Correlation pearson_r(const std::vector<double>& x, const std::vector<double>& y,
                      int permutations = 10000, uint64_t seed = 42);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace mobiscope

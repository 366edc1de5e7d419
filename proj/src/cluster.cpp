#include "mobiscope/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mobiscope/error.hpp"
#include "mobiscope/rng.hpp"

namespace mobiscope {

namespace {

double dist_sq(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct LloydResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignments;
  double sse = 0.0;
  int iterations = 0;
  std::vector<double> sse_history;
};

void seed_plus_plus(const std::vector<std::vector<double>>& x, int k, Rng& rng,
                    std::vector<std::vector<double>>& centroids) {
  const size_t n = x.size();
  centroids.clear();
  centroids.push_back(x[bounded(rng, n)]);
  std::vector<double> d2(n);
  while (centroids.size() < static_cast<size_t>(k)) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, dist_sq(x[i], c));
      d2[i] = best;
      total += best;
    }
    size_t pick;
    if (total <= 0.0) {
      pick = bounded(rng, n);
    } else {
      const double t = u01(rng) * total;
      double cum = 0.0;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (t < cum) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(x[pick]);
  }
}

LloydResult lloyd(const std::vector<std::vector<double>>& x, int k, Rng& rng, int max_iter,
                  double tol, bool collect_history) {
  const size_t n = x.size();
  const size_t dim = x[0].size();
  LloydResult r;
  seed_plus_plus(x, k, rng, r.centroids);
  r.assignments.assign(n, -1);

  auto assign = [&]() {
    bool changed = false;
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = dist_sq(x[i], r.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = dist_sq(x[i], r.centroids[static_cast<size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (r.assignments[i] != best) {
        r.assignments[i] = best;
        changed = true;
      }
      sse += best_d;
    }
    r.sse = sse;
    if (collect_history) r.sse_history.push_back(sse);
    return changed;
  };

  auto update = [&]() {
    std::vector<std::vector<double>> sums(static_cast<size_t>(k),
                                          std::vector<double>(dim, 0.0));
    std::vector<int64_t> counts(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < n; ++i) {
      const auto c = static_cast<size_t>(r.assignments[i]);
      ++counts[c];
      for (size_t j = 0; j < dim; ++j) sums[c][j] += x[i][j];
    }
    // Reseed empty clusters on the point farthest from its own centroid.
    // Donors must keep at least 2 members so a repair never empties another
    // cluster, which bounds this loop at k repairs; ties break to the lowest
    // point index for determinism.
    for (;;) {
      int empty = -1;
      for (int c = 0; c < k; ++c) {
        if (counts[static_cast<size_t>(c)] == 0) {
          empty = c;
          break;
        }
      }
      if (empty < 0) break;
      int64_t far_i = -1;
      double far_d = -1.0;
      for (size_t i = 0; i < n; ++i) {
        const auto owner = static_cast<size_t>(r.assignments[i]);
        if (counts[owner] < 2) continue;
        const double d = dist_sq(x[i], r.centroids[owner]);
        if (d > far_d) {
          far_d = d;
          far_i = static_cast<int64_t>(i);
        }
      }
      // k <= n guarantees a donor exists whenever a cluster is empty.
      const auto fi = static_cast<size_t>(far_i);
      const auto old_c = static_cast<size_t>(r.assignments[fi]);
      const auto new_c = static_cast<size_t>(empty);
      --counts[old_c];
      ++counts[new_c];
      for (size_t j = 0; j < dim; ++j) {
        sums[old_c][j] -= x[fi][j];
        sums[new_c][j] += x[fi][j];
      }
      r.assignments[fi] = empty;
      r.centroids[new_c] = x[fi];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      const auto cc = static_cast<size_t>(c);
      std::vector<double> next(dim);
      for (size_t j = 0; j < dim; ++j) {
        next[j] = sums[cc][j] / static_cast<double>(counts[cc]);
      }
      shift = std::max(shift, std::sqrt(dist_sq(next, r.centroids[cc])));
      r.centroids[cc] = std::move(next);
    }
    return shift;
  };

  assign();
  r.iterations = 1;
  for (int it = 1; it < max_iter; ++it) {
    const double shift = update();
    const bool changed = assign();
    ++r.iterations;
    // Fixed point: the assignment survived an update, so centroids are the
    // means of their members and every point sits in its nearest cluster.
    if (!changed) break;
    if (shift <= tol && it + 1 < max_iter) {
      // Negligible centroid motion; settle once more and stop.
      update();
      assign();
      ++r.iterations;
      break;
    }
  }
  return r;
}

}  // namespace

ClusterModel kmeans(const std::vector<std::vector<double>>& vectors,
                    const KmeansParams& params) {
  const size_t n = vectors.size();
  if (n == 0) fail(errc::empty_input, "kmeans: no vectors");
  const size_t dim = vectors[0].size();
  if (dim == 0) fail(errc::shape, "kmeans: zero-dimensional vectors");
  for (const auto& v : vectors) {
    if (v.size() != dim) fail(errc::shape, "kmeans: inconsistent dimensions");
    for (double value : v) {
      if (!std::isfinite(value)) fail(errc::invalid_input, "kmeans: non-finite value");
    }
  }
  if (params.k < 1) fail(errc::parameter, "kmeans: k must be >= 1");
  if (static_cast<size_t>(params.k) > n) {
    fail(errc::parameter, "kmeans: k exceeds the number of vectors");
  }
  if (params.restarts < 1) fail(errc::parameter, "kmeans: restarts must be >= 1");

  ClusterModel best;
  best.sse = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < params.restarts; ++restart) {
    Rng rng = make_rng(params.seed, static_cast<uint64_t>(restart));
    LloydResult r = lloyd(vectors, params.k, rng, params.max_iter, params.tol,
                          params.collect_history);
    if (params.collect_history) best.restart_sse_history.push_back(r.sse_history);
    if (r.sse < best.sse) {
      best.sse = r.sse;
      best.centroids = std::move(r.centroids);
      best.assignments = std::move(r.assignments);
      best.iterations = r.iterations;
    }
  }
  best.k = params.k;
  best.seed = params.seed;
  return best;
}

SseCurve sse_curve(const std::vector<std::vector<double>>& vectors, int k_min, int k_max,
                   uint64_t seed, int restarts) {
  if (k_min < 1 || k_max < k_min) fail(errc::parameter, "sse_curve: bad k range");
  SseCurve curve;
  KmeansParams params;
  params.seed = seed;
  params.restarts = restarts;
  for (int k = k_min; k <= k_max; ++k) {
    params.k = k;
    curve.points.emplace_back(k, kmeans(vectors, params).sse);
  }
  return curve;
}

int suggest_k(const SseCurve& curve) {
  const size_t n = curve.points.size();
  if (n < 3) fail(errc::precondition, "suggest_k: need at least 3 curve points");
  for (size_t i = 1; i < n; ++i) {
    if (curve.points[i].first <= curve.points[i - 1].first) {
      fail(errc::precondition, "suggest_k: k values must ascend");
    }
  }
  const double k0 = curve.points.front().first;
  const double k1 = curve.points.back().first;
  const double s0 = curve.points.front().second;
  const double s1 = curve.points.back().second;
  const double k_span = k1 - k0;
  const double s_span = s1 - s0;
  int best_k = curve.points[1].first;
  double best_d = -1.0;
  for (size_t i = 1; i + 1 < n; ++i) {
    const double xk = (curve.points[i].first - k0) / k_span;
    const double ys = s_span != 0.0 ? (curve.points[i].second - s0) / s_span : 0.0;
    // Distance from (xk, ys) to the chord between (0,0) and (1,1), up to the
    // constant 1/sqrt(2) factor which does not affect the argmax.
    const double d = std::abs(ys - xk);
    if (d > best_d) {
      best_d = d;
      best_k = curve.points[i].first;
    }
  }
  return best_k;
}

Correlation pearson_r(const std::vector<double>& x, const std::vector<double>& y,
                      int permutations, uint64_t seed) {
  if (x.size() != y.size()) fail(errc::shape, "pearson_r: length mismatch");
  const size_t n = x.size();
  if (n < 3) fail(errc::precondition, "pearson_r: need at least 3 pairs");
  if (permutations < 0) fail(errc::parameter, "pearson_r: negative permutation count");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      fail(errc::invalid_input, "pearson_r: non-finite value");
    }
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  std::vector<double> dx(n), dy(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    dx[i] = x[i] - mx;
    dy[i] = y[i] - my;
    sxx += dx[i] * dx[i];
    syy += dy[i] * dy[i];
    sxy += dx[i] * dy[i];
  }
  if (sxx == 0.0 || syy == 0.0) {
    fail(errc::degenerate, "pearson_r: an input has zero variance");
  }
  const double denom = std::sqrt(sxx * syy);
  Correlation out;
  out.n = static_cast<int>(n);
  out.r = sxy / denom;

  Rng rng = make_rng(seed, 0);
  int64_t hits = 0;
  std::vector<double> perm = dy;
  const double target = std::abs(out.r);
  for (int p = 0; p < permutations; ++p) {
    shuffle_vec(rng, perm);
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += dx[i] * perm[i];
    if (std::abs(s / denom) >= target) ++hits;
  }
  out.p = static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) fail(errc::shape, "adjusted_rand_index: length mismatch");
  if (a.empty()) fail(errc::empty_input, "adjusted_rand_index: empty labels");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, int64_t> joint;
  std::map<int, int64_t> ca, cb;
  for (size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++ca[a[i]];
    ++cb[b[i]];
  }
  auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, cnt] : joint) sum_joint += choose2(static_cast<double>(cnt));
  for (const auto& [key, cnt] : ca) sum_a += choose2(static_cast<double>(cnt));
  for (const auto& [key, cnt] : cb) sum_b += choose2(static_cast<double>(cnt));
  const double total = choose2(n);
  const double expected = sum_a * sum_b / total;
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace mobiscope

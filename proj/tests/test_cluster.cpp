#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mobiscope/cluster.hpp"
#include "mobiscope/error.hpp"
#include "mobiscope/rng.hpp"

using namespace mobiscope;

namespace {

std::vector<std::vector<double>> two_blobs() {
  return {{0.0, 0.1}, {0.2, 0.0}, {0.1, 0.2}, {0.0, 0.0},
          {100.0, 100.1}, {100.2, 100.0}, {100.1, 100.2}, {100.0, 100.0}};
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

TEST_SUITE("cluster") {
  TEST_CASE("k=1 yields the mean and the total scatter") {
    KmeansParams kp;
    kp.k = 1;
    const ClusterModel m = kmeans({{0.0}, {2.0}, {4.0}}, kp);
    REQUIRE(m.centroids.size() == 1);
    CHECK(m.centroids[0][0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.sse == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(m.assignments == std::vector<int>{0, 0, 0});
  }

  TEST_CASE("k=n puts every point in its own cluster") {
    KmeansParams kp;
    kp.k = 4;
    const ClusterModel m = kmeans({{0.0}, {1.0}, {5.0}, {9.0}}, kp);
    CHECK(m.sse == 0.0);
    std::vector<int> seen = m.assignments;
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3});
  }

  TEST_CASE("separated blobs split cleanly and deterministically") {
    KmeansParams kp;
    kp.k = 2;
    const auto vecs = two_blobs();
    const ClusterModel m1 = kmeans(vecs, kp);
    const ClusterModel m2 = kmeans(vecs, kp);
    CHECK(m1.sse == m2.sse);
    CHECK(m1.assignments == m2.assignments);
    CHECK(m1.centroids == m2.centroids);
    for (int i = 1; i < 4; ++i) CHECK(m1.assignments[static_cast<size_t>(i)] == m1.assignments[0]);
    for (int i = 5; i < 8; ++i) CHECK(m1.assignments[static_cast<size_t>(i)] == m1.assignments[4]);
    CHECK(m1.assignments[0] != m1.assignments[4]);
  }

  TEST_CASE("model invariants hold on random data") {
    Rng rng = make_rng(17, 0);
    std::vector<std::vector<double>> vecs;
    for (int i = 0; i < 40; ++i) {
      vecs.push_back({uniform(rng, 0, 10), uniform(rng, 0, 10), uniform(rng, 0, 10)});
    }
    KmeansParams kp;
    kp.k = 4;
    kp.collect_history = true;
    const ClusterModel m = kmeans(vecs, kp);
    REQUIRE(m.centroids.size() == 4);
    REQUIRE(m.assignments.size() == vecs.size());

    // Each centroid is the mean of its members.
    std::vector<std::vector<double>> sums(4, std::vector<double>(3, 0.0));
    std::vector<int> counts(4, 0);
    for (size_t i = 0; i < vecs.size(); ++i) {
      const int a = m.assignments[i];
      REQUIRE(a >= 0);
      REQUIRE(a < 4);
      for (size_t d = 0; d < 3; ++d) sums[static_cast<size_t>(a)][d] += vecs[i][d];
      ++counts[static_cast<size_t>(a)];
    }
    double expect_sse = 0.0;
    for (size_t c = 0; c < 4; ++c) {
      REQUIRE(counts[c] > 0);
      for (size_t d = 0; d < 3; ++d) {
        CHECK(m.centroids[c][d] == doctest::Approx(sums[c][d] / counts[c]).epsilon(1e-9));
      }
    }
    // Each point sits nearest its own centroid, and the SSE matches.
    for (size_t i = 0; i < vecs.size(); ++i) {
      const double own = sq_dist(vecs[i], m.centroids[static_cast<size_t>(m.assignments[i])]);
      expect_sse += own;
      for (size_t c = 0; c < 4; ++c) {
        CHECK(own <= sq_dist(vecs[i], m.centroids[c]) + 1e-9);
      }
    }
    CHECK(m.sse == doctest::Approx(expect_sse).epsilon(1e-9));

    // Lloyd never increases the SSE within a restart.
    REQUIRE(!m.restart_sse_history.empty());
    for (const auto& hist : m.restart_sse_history) {
      for (size_t i = 1; i < hist.size(); ++i) {
        CHECK(hist[i] <= hist[i - 1] + 1e-9);
      }
    }
  }

  TEST_CASE("input validation") {
    KmeansParams kp;
    CHECK_THROWS_AS(kmeans({}, kp), Error);
    kp.k = 5;
    CHECK_THROWS_AS(kmeans({{1.0}, {2.0}}, kp), Error);
    kp.k = 2;
    CHECK_THROWS_AS(kmeans({{1.0}, {2.0, 3.0}}, kp), Error);
    CHECK_THROWS_AS(kmeans({{1.0}, {std::nan("")}}, kp), Error);
  }

  TEST_CASE("sse curve falls as k grows on separable data") {
    const auto vecs = two_blobs();
    const SseCurve curve = sse_curve(vecs, 1, 5, 42);
    REQUIRE(curve.points.size() == 5);
    for (size_t i = 0; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].first == static_cast<int>(i) + 1);
      if (i > 0) CHECK(curve.points[i].second <= curve.points[i - 1].second + 1e-9);
    }
    CHECK(curve.points[1].second < 1.0);  // two clusters already explain the data
  }

  TEST_CASE("suggest_k picks the elbow") {
    SseCurve curve;
    curve.points = {{1, 10.0}, {2, 4.0}, {3, 1.0}, {4, 0.9}, {5, 0.8}};
    CHECK(suggest_k(curve) == 3);
  }

  TEST_CASE("suggest_k breaks ties toward the smaller k") {
    // xk steps of exactly 0.25 and dyadic SSE values keep the two candidate
    // distances bit-identical at 0.5.
    SseCurve curve;
    curve.points = {{1, 1.0}, {2, 0.25}, {3, 1.0}, {4, 0.25}, {5, 0.0}};
    CHECK(suggest_k(curve) == 2);
  }

  TEST_CASE("suggest_k needs three points and ascending k") {
    SseCurve tiny;
    tiny.points = {{1, 5.0}, {2, 1.0}};
    CHECK_THROWS_AS(suggest_k(tiny), Error);
    SseCurve bad;
    bad.points = {{1, 5.0}, {3, 2.0}, {2, 1.0}};
    CHECK_THROWS_AS(suggest_k(bad), Error);
  }

  TEST_CASE("pearson recovers exact correlations") {
    // n must be large enough that order-preserving shuffles are rare; at n=4
    // a perfect correlation cannot drop below p ~ 2/24.
    std::vector<double> xs, ys;
    for (int i = 0; i < 10; ++i) {
      xs.push_back(i);
      ys.push_back(2.0 * i + 1.0);
    }
    const Correlation perfect = pearson_r(xs, ys, 999, 5);
    CHECK(perfect.r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(perfect.p < 0.01);
    CHECK(perfect.n == 10);
    std::vector<double> rev(ys.rbegin(), ys.rend());
    const Correlation anti = pearson_r(xs, rev, 999, 5);
    CHECK(anti.r == doctest::Approx(-1.0).epsilon(1e-12));
    const Correlation hand = pearson_r({0, 1, 2, 3}, {0, 0, 1, 1}, 99, 5);
    CHECK(hand.r == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
    CHECK(hand.p > 0.0);
    CHECK(hand.p <= 1.0);
  }

  TEST_CASE("pearson rejects degenerate input") {
    CHECK_THROWS_AS(pearson_r({1, 1, 1}, {1, 2, 3}, 10, 1), Error);
    CHECK_THROWS_AS(pearson_r({1, 2}, {1, 2}, 10, 1), Error);
    CHECK_THROWS_AS(pearson_r({1, 2, 3}, {1, 2}, 10, 1), Error);
  }

  TEST_CASE("permutation p-value is reproducible and bounded below") {
    const Correlation a = pearson_r({1, 5, 2, 8, 3}, {2, 6, 1, 9, 4}, 200, 7);
    const Correlation b = pearson_r({1, 5, 2, 8, 3}, {2, 6, 1, 9, 4}, 200, 7);
    CHECK(a.p == b.p);
    CHECK(a.p >= 1.0 / 201.0);
  }

  TEST_CASE("adjusted rand index") {
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
    // Hand value: 12/37 for a one-point disagreement.
    CHECK(adjusted_rand_index({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 1}) ==
          doctest::Approx(12.0 / 37.0).epsilon(1e-12));
    // Trivial partitions agree with themselves by convention.
    CHECK(adjusted_rand_index({3, 3, 3}, {9, 9, 9}) == 1.0);
    CHECK(adjusted_rand_index({0, 1, 2}, {2, 0, 1}) == 1.0);
    CHECK_THROWS_AS(adjusted_rand_index({}, {}), Error);
    CHECK_THROWS_AS(adjusted_rand_index({1}, {1, 2}), Error);
  }
}

#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "openad/error.hpp"
#include "openad/geometry.hpp"
#include "support.hpp"

using namespace openad;
using openad::testing::brute_force_fps;
using openad::testing::random_cloud;

namespace {

PointCloud cloud_of(std::initializer_list<Vec3> pts) {
  PointCloud c;
  c.points = pts;
  return c;
}

double max_norm(const PointCloud& c) {
  double m = 0.0;
  for (const auto& p : c.points) m = std::max(m, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
  return m;
}

}  // namespace

TEST_CASE("center_and_scale maps two symmetric points to the unit axis") {
  const auto out = center_and_scale(cloud_of({{1, 1, 1}, {3, 1, 1}}));
  CHECK_FALSE(out.degenerate);
  CHECK(out.cloud.points[0] == Vec3{-1, 0, 0});
  CHECK(out.cloud.points[1] == Vec3{1, 0, 0});
}

TEST_CASE("center_and_scale leaves a normalized cloud unchanged") {
  const auto in = cloud_of({{1, 0, 0}, {-1, 0, 0}, {0, 0.5, 0}, {0, -0.5, 0}});
  const auto out = center_and_scale(in).cloud;
  for (std::size_t i = 0; i < in.size(); ++i) {
    for (int a = 0; a < 3; ++a) CHECK(out.points[i][a] == doctest::Approx(in.points[i][a]).epsilon(1e-15));
  }
}

TEST_CASE("center_and_scale output has zero centroid and unit radius") {
  Rng rng(3);
  PointCloud c;
  for (int i = 0; i < 64; ++i) c.points.push_back({rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)});
  const auto out = center_and_scale(c).cloud;
  Vec3 centroid{0, 0, 0};
  for (const auto& p : out.points) {
    for (int a = 0; a < 3; ++a) centroid[a] += p[a] / 64.0;
  }
  for (double v : centroid) CHECK(std::abs(v) < 1e-6);
  CHECK(std::abs(max_norm(out) - 1.0) < 1e-6);
}

TEST_CASE("center_and_scale is idempotent and translation invariant") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    PointCloud c = random_cloud(rng, 10 + seed);
    const auto once = center_and_scale(c).cloud;
    const auto twice = center_and_scale(once).cloud;
    PointCloud moved = c;
    const Vec3 t{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    for (auto& p : moved.points) {
      for (int a = 0; a < 3; ++a) p[a] += t[a];
    }
    const auto shifted = center_and_scale(moved).cloud;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(once.points[i][a] - twice.points[i][a]) < 1e-6);
        CHECK(std::abs(once.points[i][a] - shifted.points[i][a]) < 1e-6);
      }
    }
  }
}

TEST_CASE("center_and_scale flags coincident points and keeps labels") {
  PointCloud c = cloud_of({{2, 2, 2}, {2, 2, 2}});
  c.labels = {4, 7};
  const auto out = center_and_scale(c);
  CHECK(out.degenerate);
  CHECK(out.cloud.points[0] == Vec3{0, 0, 0});
  CHECK(out.cloud.labels == std::vector<std::uint32_t>{4, 7});
}

TEST_CASE("validate rejects empty, non-finite and mislabelled clouds") {
  CHECK_THROWS_AS(validate(PointCloud{}), Error);
  CHECK_THROWS_AS(validate(cloud_of({{0, std::nan(""), 0}})), Error);
  PointCloud c = cloud_of({{0, 0, 0}, {1, 1, 1}});
  c.labels = {0};
  CHECK_THROWS_AS(validate(c), Error);
  c.labels = {0, 3};
  CHECK_NOTHROW(validate(c));
  CHECK_THROWS_AS(validate(c, 3), Error);
}

TEST_CASE("FPS on colinear points picks the far end") {
  const auto c = cloud_of({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {10, 0, 0}});
  CHECK(farthest_point_sample(c, 2, 0) == std::vector<std::size_t>{0, 3});
}

TEST_CASE("FPS with k = n is a permutation") {
  Rng rng(5);
  const auto c = random_cloud(rng, 17);
  auto idx = farthest_point_sample(c, 17, 0);
  std::sort(idx.begin(), idx.end());
  std::vector<std::size_t> all(17);
  std::iota(all.begin(), all.end(), 0);
  CHECK(idx == all);
}

TEST_CASE("FPS matches the brute-force greedy oracle") {
  Rng rng(11);
  const auto c = random_cloud(rng, 32);
  CHECK(farthest_point_sample(c, 4, 0) == brute_force_fps(c, 4, 0));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng r(seed);
    const std::size_t n = 1 + r.below(64);
    const std::size_t k = 1 + r.below(n);
    const std::size_t start = r.below(n);
    const auto cloud = random_cloud(r, n);
    CHECK(farthest_point_sample(cloud, k, start) == brute_force_fps(cloud, k, start));
  }
}

TEST_CASE("FPS breaks ties toward the lowest index") {
  // Points on an integer grid produce many equal distances.
  PointCloud c;
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) c.points.push_back({double(x), double(y), 0});
  }
  for (std::size_t k = 1; k <= c.size(); ++k) CHECK(farthest_point_sample(c, k, 4) == brute_force_fps(c, k, 4));
  CHECK(farthest_point_sample(c, 2, 4)[1] == 0);
}

TEST_CASE("FPS ignores appended duplicates of selected points") {
  Rng rng(8);
  PointCloud c = random_cloud(rng, 20);
  const auto before = farthest_point_sample(c, 6, 0);
  PointCloud extended = c;
  for (std::size_t i : before) extended.points.push_back(c.points[i]);
  CHECK(farthest_point_sample(extended, 6, 0) == before);
}

TEST_CASE("FPS spreads points at least as well as random subsets") {
  auto min_pair = [](const PointCloud& c, const std::vector<std::size_t>& idx) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        best = std::min(best, squared_distance(c.points[idx[a]], c.points[idx[b]]));
      }
    }
    return best;
  };
  int fps_wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto c = random_cloud(rng, 24);
    std::vector<std::size_t> random_idx(24);
    std::iota(random_idx.begin(), random_idx.end(), 0);
    rng.shuffle(random_idx.begin(), random_idx.end());
    random_idx.resize(5);
    fps_wins += min_pair(c, farthest_point_sample(c, 5, 0)) >= min_pair(c, random_idx);
  }
  CHECK(fps_wins >= 95);
}

TEST_CASE("FPS argument errors") {
  const auto c = cloud_of({{0, 0, 0}, {1, 0, 0}});
  CHECK_THROWS_WITH_AS(farthest_point_sample(c, 3, 0), doctest::Contains("sample size exceeds cloud size"), Error);
  CHECK_THROWS_AS(farthest_point_sample(c, 0, 0), Error);
  CHECK_THROWS_AS(farthest_point_sample(c, 1, 2), Error);
}

TEST_CASE("resample_to_n keeps every point when upsampling") {
  PointCloud c = cloud_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
  c.labels = {0, 1, 2};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto out = resample_to_n(c, 5, seed);
    REQUIRE(out.size() == 5);
    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto it = std::find(c.points.begin(), c.points.end(), out.points[i]);
      REQUIRE(it != c.points.end());
      CHECK(out.labels[i] == c.labels[static_cast<std::size_t>(it - c.points.begin())]);
      seen.insert(out.labels[i]);
    }
    CHECK(seen.size() == 3);
  }
}

TEST_CASE("resample_to_n downsamples with FPS") {
  Rng rng(21);
  const auto c = random_cloud(rng, 4096);
  const auto out = resample_to_n(c, 2048, 99);
  const auto idx = farthest_point_sample(c, 2048, 0);
  REQUIRE(out.size() == 2048);
  for (std::size_t i = 0; i < 2048; ++i) CHECK(out.points[i] == c.points[idx[i]]);
}

TEST_CASE("resample_to_n at the target size returns the same point set") {
  Rng rng(4);
  const auto c = random_cloud(rng, 30);
  const auto out = resample_to_n(c, 30, 1);
  auto a = c.points;
  auto b = out.points;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("FPS oracle agrees on a 4096-point cloud") {
  // The brute-force oracle is cubic, so check a prefix of the selection.
  Rng rng(21);
  const auto c = random_cloud(rng, 4096);
  const auto fast = farthest_point_sample(c, 2048, 0);
  const auto slow = brute_force_fps(c, 24, 0);
  CHECK(std::equal(slow.begin(), slow.end(), fast.begin()));
}

#include "openad/geometry.hpp"

#include <cmath>
#include <limits>

#include "openad/error.hpp"
#include "openad/random.hpp"

namespace openad {

namespace {
constexpr double kDegenerateNorm = 1e-12;
}

void validate(const PointCloud& cloud, std::optional<std::size_t> num_labels) {
  if (cloud.points.empty()) throw_data("empty point cloud" + (cloud.id.empty() ? "" : " '" + cloud.id + "'"));
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    for (double c : cloud.points[i]) {
      if (!std::isfinite(c)) throw_data("non-finite coordinate at point " + std::to_string(i));
    }
  }
  if (cloud.has_labels()) {
    if (cloud.labels.size() != cloud.points.size()) {
      throw_data("label count " + std::to_string(cloud.labels.size()) + " does not match point count " +
                 std::to_string(cloud.points.size()));
    }
    if (num_labels) {
      for (std::size_t i = 0; i < cloud.labels.size(); ++i) {
        if (cloud.labels[i] >= *num_labels) {
          throw_data("label " + std::to_string(cloud.labels[i]) + " at point " + std::to_string(i) +
                     " outside [0, " + std::to_string(*num_labels) + ")");
        }
      }
    }
  }
}

NormalizedCloud center_and_scale(const PointCloud& cloud) {
  validate(cloud);
  const double n = static_cast<double>(cloud.size());
  Vec3 centroid{0.0, 0.0, 0.0};
  for (const Vec3& p : cloud.points) {
    for (int a = 0; a < 3; ++a) centroid[a] += p[a];
  }
  for (double& c : centroid) c /= n;

  NormalizedCloud out;
  out.cloud = cloud;
  double max_sq = 0.0;
  for (Vec3& p : out.cloud.points) {
    for (int a = 0; a < 3; ++a) p[a] -= centroid[a];
    max_sq = std::max(max_sq, p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  const double radius = std::sqrt(max_sq);
  if (radius < kDegenerateNorm) {
    out.degenerate = true;
    return out;
  }
  for (Vec3& p : out.cloud.points) {
    for (double& c : p) c /= radius;
  }
  return out;
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                               std::size_t start) {
  const std::size_t n = cloud.size();
  if (k > n) throw_usage("sample size exceeds cloud size (" + std::to_string(k) + " > " + std::to_string(n) + ")");
  if (k == 0) throw_usage("sample size must be at least 1");
  if (start >= n) throw_usage("FPS start index " + std::to_string(start) + " out of range");

  std::vector<std::size_t> selected;
  selected.reserve(k);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  std::size_t current = start;
  for (std::size_t step = 0; step < k; ++step) {
    selected.push_back(current);
    taken[current] = 1;
    if (step + 1 == k) break;
    const Vec3& c = cloud.points[current];
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      min_dist[i] = std::min(min_dist[i], squared_distance(cloud.points[i], c));
      // Strict comparison keeps the lowest index on ties.
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    current = best;
  }
  return selected;
}

PointCloud gather(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  PointCloud out;
  out.id = cloud.id;
  out.points.reserve(indices.size());
  if (cloud.has_labels()) out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(cloud.points.at(i));
    if (cloud.has_labels()) out.labels.push_back(cloud.labels.at(i));
  }
  return out;
}

PointCloud resample_to_n(const PointCloud& cloud, std::size_t n_target, std::uint64_t seed) {
  validate(cloud);
  if (n_target == 0) throw_usage("target point count must be at least 1");
  const std::size_t n = cloud.size();
  if (n >= n_target) return gather(cloud, farthest_point_sample(cloud, n_target, 0));

  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = i;
  Rng rng(seed);
  while (indices.size() < n_target) indices.push_back(static_cast<std::size_t>(rng.below(n)));
  return gather(cloud, indices);
}

}  // namespace openad

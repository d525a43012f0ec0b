#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace openad {

using Vec3 = std::array<double, 3>;

/// An unordered set of 3D points with optional per-point affordance ids.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::uint32_t> labels;  // empty, or one id per point
  std::string id;

  std::size_t size() const { return points.size(); }
  bool has_labels() const { return !labels.empty(); }
};

/// Throws Error(kData) unless the cloud is non-empty, finite, and (when
/// labelled) carries exactly one label per point. With `num_labels` set,
/// every label must also lie in [0, num_labels).
void validate(const PointCloud& cloud,
              std::optional<std::size_t> num_labels = std::nullopt);

struct NormalizedCloud {
  PointCloud cloud;
  bool degenerate = false;  // all points coincide; output is centered only
};

/// Translates the centroid to the origin and scales so the farthest point
/// has unit norm. Labels pass through unchanged.
NormalizedCloud center_and_scale(const PointCloud& cloud);

/// Greedy farthest point sampling. Ties resolve to the lowest index.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                               std::size_t start = 0);

/// Fixes the cloud size at `n_target`: FPS (start 0) when downsampling or
/// keeping size, keep-all plus seeded uniform duplicates when upsampling.
PointCloud resample_to_n(const PointCloud& cloud, std::size_t n_target, std::uint64_t seed);

/// Copies the points (and labels) at `indices`, in that order.
PointCloud gather(const PointCloud& cloud, const std::vector<std::size_t>& indices);

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace openad

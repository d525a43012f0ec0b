#include "openad/ply.hpp"

#include <cstdio>
#include <fstream>

#include "openad/error.hpp"

namespace openad {

const std::array<Rgb, 12>& palette() {
  static const std::array<Rgb, 12> colors{{
      {230, 25, 75},   {60, 180, 75},   {0, 130, 200},  {245, 130, 48},
      {145, 30, 180},  {70, 240, 240},  {240, 50, 230}, {210, 245, 60},
      {250, 190, 212}, {0, 128, 128},   {170, 110, 40}, {128, 128, 128},
  }};
  return colors;
}

std::string format_ply(const PointCloud& cloud, const std::vector<std::size_t>& assignment,
                       const std::vector<std::string>& labels) {
  if (assignment.size() != cloud.size()) throw_usage("assignment count does not match point count");
  std::string out = "ply\nformat ascii 1.0\n";
  for (std::size_t j = 0; j < labels.size(); ++j) out += "comment label " + std::to_string(j) + " " + labels[j] + "\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char buf[160];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Rgb& c = palette()[assignment[i] % palette().size()];
    const auto& p = cloud.points[i];
    const int len = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u %u %u\n", static_cast<double>(static_cast<float>(p[0])),
                                  static_cast<double>(static_cast<float>(p[1])),
                                  static_cast<double>(static_cast<float>(p[2])), c[0], c[1], c[2]);
    out.append(buf, static_cast<std::size_t>(len));
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, const std::vector<std::size_t>& assignment,
               const std::vector<std::string>& labels) {
  const std::string text = format_ply(cloud, assignment, labels);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace openad

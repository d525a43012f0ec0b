#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "openad/geometry.hpp"

namespace openad {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed 12-colour palette; label j is drawn with palette()[j % 12].
const std::array<Rgb, 12>& palette();

/// ASCII PLY with float x/y/z and uchar red/green/blue per vertex. Label
/// names are recorded in `comment label <index> <name>` header lines.
std::string format_ply(const PointCloud& cloud, const std::vector<std::size_t>& assignment,
                       const std::vector<std::string>& labels);

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, const std::vector<std::size_t>& assignment,
               const std::vector<std::string>& labels);

}  // namespace openad

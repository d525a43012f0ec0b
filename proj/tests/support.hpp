#pragma once

// Independent reference implementations and fixtures shared by the tests.
// The oracles deliberately use the most literal formulation available
// (brute force, scalar loops, long double) rather than the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "openad/geometry.hpp"
#include "openad/gradcheck.hpp"
#include "openad/head.hpp"
#include "openad/matrix.hpp"
#include "openad/parameters.hpp"
#include "openad/random.hpp"

namespace openad::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

inline PointCloud random_cloud(Rng& rng, std::size_t n, std::uint32_t num_labels = 0) {
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    if (num_labels > 0) cloud.labels.push_back(static_cast<std::uint32_t>(rng.below(num_labels)));
  }
  return cloud;
}

/// Greedy farthest point sampling recomputing every distance from scratch:
/// O(k * n^2) in the worst case, no incremental state.
inline std::vector<std::size_t> brute_force_fps(const PointCloud& cloud, std::size_t k, std::size_t start) {
  std::vector<std::size_t> chosen{start};
  while (chosen.size() < k) {
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t s : chosen) {
        const auto& a = cloud.points[i];
        const auto& b = cloud.points[s];
        nearest = std::min(nearest, (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                                        (a[2] - b[2]) * (a[2] - b[2]));
      }
      if (nearest > best_dist) {
        best_dist = nearest;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

/// Scalar enumeration of cosine correlation, scaled softmax and the weighted
/// NLL in long double.
struct ScalarHead {
  std::vector<std::vector<long double>> correlation;
  std::vector<std::vector<long double>> scores;
  long double loss = 0;
};

inline ScalarHead scalar_head(const Matrix& features, const Matrix& text, long double scale,
                              const std::vector<std::uint32_t>& labels, const std::vector<double>& weights) {
  ScalarHead out;
  const std::size_t n = features.rows();
  const std::size_t m = text.rows();
  const std::size_t d = features.cols();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> f(m), p(m);
    for (std::size_t j = 0; j < m; ++j) {
      long double dot = 0, pn = 0, tn = 0;
      for (std::size_t k = 0; k < d; ++k) {
        dot += static_cast<long double>(features(i, k)) * text(j, k);
        pn += static_cast<long double>(features(i, k)) * features(i, k);
        tn += static_cast<long double>(text(j, k)) * text(j, k);
      }
      f[j] = dot / (std::sqrt(pn) * std::sqrt(tn));
    }
    long double denom = 0;
    for (std::size_t j = 0; j < m; ++j) denom += std::exp(scale * f[j]);
    for (std::size_t j = 0; j < m; ++j) p[j] = std::exp(scale * f[j]) / denom;
    if (!labels.empty()) out.loss -= weights[labels[i]] * std::log(p[labels[i]]);
    out.correlation.push_back(f);
    out.scores.push_back(p);
  }
  return out;
}

/// Counts (truth, predicted) pairs one at a time.
inline std::vector<std::vector<std::uint64_t>> count_pairs(const std::vector<std::size_t>& predicted,
                                                           const std::vector<std::size_t>& truth, std::size_t m) {
  std::vector<std::vector<std::uint64_t>> counts(m, std::vector<std::uint64_t>(m, 0));
  for (std::size_t g = 0; g < m; ++g) {
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t i = 0; i < truth.size(); ++i) counts[g][p] += (truth[i] == g && predicted[i] == p);
    }
  }
  return counts;
}

/// Objective for gradient checks: returns the loss, writes analytic
/// gradients into the store's grad slots when `with_grad` is set, and
/// reports the branch signature.
using Objective = std::function<double(ParameterStore&, bool with_grad, std::uint64_t& signature)>;

inline GradCheckReport check_gradients(ParameterStore& params, const Objective& objective) {
  params.zero_grad();
  std::uint64_t ignored = 0;
  objective(params, true, ignored);
  return finite_difference_check(params, [&] {
    Probe probe;
    probe.value = objective(params, false, probe.signature);
    return probe;
  });
}

/// Sum of R .* X, the usual way to turn a matrix-valued kernel into a scalar.
inline double weighted_sum(const Matrix& r, const Matrix& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += r.values()[i] * x.values()[i];
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("openad_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Minimal ASCII PLY reader that enforces the header grammar: magic,
/// format line, comments, one `element vertex N`, typed scalar properties,
/// end_header, then exactly N rows whose tokens parse as their types.
struct PlyVertex {
  std::vector<double> values;
};
struct PlyFile {
  std::vector<std::string> comments;
  std::vector<std::pair<std::string, std::string>> properties;  // type, name
  std::vector<PlyVertex> vertices;
  bool ok = false;
  std::string error;
};

inline PlyFile parse_ply(const std::string& text) {
  static const std::map<std::string, std::pair<double, double>> kRanges{
      {"char", {-128, 127}},        {"uchar", {0, 255}},        {"short", {-32768, 32767}},
      {"ushort", {0, 65535}},       {"int", {-2147483648.0, 2147483647.0}}, {"uint", {0, 4294967295.0}},
      {"float", {-3.5e38, 3.5e38}}, {"double", {-1.7e308, 1.7e308}}};
  PlyFile ply;
  std::istringstream in(text);
  std::string line;
  auto fail = [&](const std::string& why) {
    ply.error = why;
    return ply;
  };
  if (!std::getline(in, line) || line != "ply") return fail("missing magic");
  if (!std::getline(in, line) || line != "format ascii 1.0") return fail("bad format line");
  long long count = -1;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "comment") {
      ply.comments.push_back(line.substr(8));
    } else if (key == "element") {
      std::string name;
      if (count >= 0 || !(ls >> name >> count) || name != "vertex" || count < 0) return fail("bad element line");
    } else if (key == "property") {
      std::string type, name, extra;
      if (count < 0 || !(ls >> type >> name) || (ls >> extra) || !kRanges.contains(type)) return fail("bad property");
      ply.properties.push_back({type, name});
    } else if (key == "end_header") {
      ended = true;
      break;
    } else {
      return fail("unexpected header line '" + line + "'");
    }
  }
  if (!ended || count < 0) return fail("incomplete header");
  for (long long v = 0; v < count; ++v) {
    if (!std::getline(in, line)) return fail("too few vertices");
    std::istringstream ls(line);
    PlyVertex vertex;
    for (const auto& [type, name] : ply.properties) {
      std::string token;
      if (!(ls >> token)) return fail("short vertex row");
      std::size_t used = 0;
      double value = 0;
      try {
        value = std::stod(token, &used);
      } catch (...) {
        return fail("bad number '" + token + "'");
      }
      if (used != token.size()) return fail("bad number '" + token + "'");
      const bool integral = type != "float" && type != "double";
      const auto [lo, hi] = kRanges.at(type);
      if ((integral && value != std::floor(value)) || value < lo || value > hi) return fail("value out of type range");
      vertex.values.push_back(value);
    }
    std::string extra;
    if (ls >> extra) return fail("long vertex row");
    ply.vertices.push_back(vertex);
  }
  if (std::getline(in, line) && !line.empty()) return fail("trailing data");
  ply.ok = true;
  return ply;
}

}  // namespace openad::testing

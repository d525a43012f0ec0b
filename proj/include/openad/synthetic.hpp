#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "openad/dataset.hpp"
#include "openad/geometry.hpp"
#include "openad/head.hpp"
#include "openad/random.hpp"

namespace openad {

// ---- labelled surface primitives ----

enum class PrimitiveKind { kCylinder, kDisk, kTorusArc, kBox, kHemisphere };

/// A parametric surface in local coordinates, rotated so local z points
/// along `axis` ('x', 'y' or 'z') and then translated by `offset`.
///   cylinder:   lateral surface, x^2 + y^2 = radius^2, |z| <= height / 2
///   disk:       z = 0, x^2 + y^2 <= radius^2
///   torus arc:  major `radius`, tube `minor_radius`, major angle in [arc_begin, arc_end]
///   box:        surface of an axis-aligned box with edge lengths `size`
///   hemisphere: x^2 + y^2 + z^2 = radius^2, z <= 0
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kCylinder;
  double radius = 0.0;
  double height = 0.0;
  double minor_radius = 0.0;
  double arc_begin = 0.0;
  double arc_end = 0.0;
  Vec3 size{};
  Vec3 offset{};
  char axis = 'z';
  std::string label;

  double area() const;
};

/// Area-uniform surface sample in world coordinates.
Vec3 sample_surface(const Primitive& primitive, Rng& rng);

/// Implicit-equation residual of a world-space point (0 on the surface).
double surface_residual(const Primitive& primitive, const Vec3& world);

/// Names of the built-in shape templates (mug, hammer, knife, bottle,
/// monitor, bowl, cylinder).
std::vector<std::string> builtin_templates();

/// Parts of one instance of a built-in template, with per-instance size
/// variation drawn from `rng` (the `cylinder` template has none).
std::vector<Primitive> instantiate_template(const std::string& base, Rng& rng);

// ---- dataset generation ----

struct TemplateSpec {
  std::string name;
  std::string base;                           // built-in template; defaults to name
  std::map<std::string, std::string> relabel;  // part label -> dataset label
};

struct SplitSpec {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> templates;  // empty: every template
};

/// Synthetic dataset description, read from JSON:
///   {"seed": 7, "points_per_shape": 512, "jitter": 0.005,
///    "labels": [...], "seen_labels": [...],
///    "templates": [{"name": "mug"}, {"name": "mug-grab", "base": "mug", "relabel": {"grasp": "grab"}}],
///    "splits": [{"name": "train", "count": 160}, {"name": "test", "count": 40, "templates": ["mug"]}]}
/// `labels` defaults to first appearance over the templates, `seen_labels`
/// to every label.
struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t points_per_shape = 512;
  double jitter = 0.0;
  std::vector<std::string> labels;
  std::optional<std::vector<std::string>> seen_labels;
  std::vector<TemplateSpec> templates;
  std::vector<SplitSpec> splits;
};

SyntheticSpec parse_synthetic_spec(const nlohmann::json& j);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

struct SyntheticDataset {
  DatasetManifest manifest;
  std::map<std::string, std::vector<PointCloud>> shapes;  // per split, in manifest order
};

/// Samples every split. Shape i of a split uses template i modulo the
/// split's eligible templates; the train split only admits templates whose
/// labels are all seen. Throws Error(kData) "cannot build training split"
/// when none qualify.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes manifest.json and shapes/<split>_<index>.xyz under `dir`.
void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& dataset);

// ---- synthetic label embeddings ----

struct LabelPair {
  std::string anchor;   // usually a seen label
  std::string partner;  // usually an unseen label
  double cosine = 0.9;
};

struct EmbeddingPlan {
  enum class Kind { kOrthonormal, kPaired } kind = Kind::kOrthonormal;
  std::vector<LabelPair> pairs;  // kPaired only
};

/// Rows come from a seeded random orthonormal basis q_0..q_{m-1}. Under the
/// paired plan a partner row becomes cosine * q_anchor + sqrt(1 - cosine^2) * q_partner,
/// so all other rows are identical to the orthonormal plan with the same seed.
/// Throws Error(kUsage) when D < m or the plan is infeasible (unknown label,
/// a label in more than one pair, |cosine| > 1).
EmbeddingTable synthetic_embeddings(const std::vector<std::string>& labels, std::size_t dim, std::uint64_t seed,
                                    const EmbeddingPlan& plan);

}  // namespace openad

#include "openad/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "openad/error.hpp"

namespace openad {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kShapeStream = 0x5a3e;
constexpr std::uint64_t kBasisStream = 0xb0a5;

// Local frame -> world frame: proper rotations taking local z onto `axis`.
Vec3 to_world(const Primitive& p, const Vec3& l) {
  Vec3 w;
  switch (p.axis) {
    case 'x': w = {l[2], l[1], -l[0]}; break;
    case 'y': w = {l[0], -l[2], l[1]}; break;
    default: w = l; break;
  }
  for (int a = 0; a < 3; ++a) w[a] += p.offset[a];
  return w;
}

Vec3 to_local(const Primitive& p, const Vec3& world) {
  Vec3 w;
  for (int a = 0; a < 3; ++a) w[a] = world[a] - p.offset[a];
  switch (p.axis) {
    case 'x': return {-w[2], w[1], w[0]};
    case 'y': return {w[0], w[2], -w[1]};
    default: return w;
  }
}

std::uint64_t name_tag(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

Primitive cylinder(double r, double h, Vec3 offset, std::string label, char axis = 'z') {
  Primitive p;
  p.kind = PrimitiveKind::kCylinder;
  p.radius = r;
  p.height = h;
  p.offset = offset;
  p.axis = axis;
  p.label = std::move(label);
  return p;
}

Primitive disk(double r, Vec3 offset, std::string label) {
  Primitive p;
  p.kind = PrimitiveKind::kDisk;
  p.radius = r;
  p.offset = offset;
  p.label = std::move(label);
  return p;
}

Primitive box(Vec3 size, Vec3 offset, std::string label) {
  Primitive p;
  p.kind = PrimitiveKind::kBox;
  p.size = size;
  p.offset = offset;
  p.label = std::move(label);
  return p;
}

}  // namespace

double Primitive::area() const {
  switch (kind) {
    case PrimitiveKind::kCylinder: return 2.0 * kPi * radius * height;
    case PrimitiveKind::kDisk: return kPi * radius * radius;
    case PrimitiveKind::kTorusArc: return 2.0 * kPi * minor_radius * radius * (arc_end - arc_begin);
    case PrimitiveKind::kBox: return 2.0 * (size[0] * size[1] + size[1] * size[2] + size[0] * size[2]);
    case PrimitiveKind::kHemisphere: return 2.0 * kPi * radius * radius;
  }
  return 0.0;
}

Vec3 sample_surface(const Primitive& p, Rng& rng) {
  Vec3 l{};
  switch (p.kind) {
    case PrimitiveKind::kCylinder: {
      const double t = rng.uniform(0.0, 2.0 * kPi);
      l = {p.radius * std::cos(t), p.radius * std::sin(t), rng.uniform(-0.5, 0.5) * p.height};
      break;
    }
    case PrimitiveKind::kDisk: {
      const double r = p.radius * std::sqrt(rng.uniform());
      const double t = rng.uniform(0.0, 2.0 * kPi);
      l = {r * std::cos(t), r * std::sin(t), 0.0};
      break;
    }
    case PrimitiveKind::kTorusArc: {
      const double u = rng.uniform(p.arc_begin, p.arc_end);
      double v = 0.0;
      // Area element is proportional to (R + a cos v).
      for (;;) {
        v = rng.uniform(0.0, 2.0 * kPi);
        if (rng.uniform() * (p.radius + p.minor_radius) <= p.radius + p.minor_radius * std::cos(v)) break;
      }
      const double ring = p.radius + p.minor_radius * std::cos(v);
      l = {ring * std::cos(u), ring * std::sin(u), p.minor_radius * std::sin(v)};
      break;
    }
    case PrimitiveKind::kBox: {
      const Vec3& s = p.size;
      const double faces[3] = {s[1] * s[2], s[0] * s[2], s[0] * s[1]};  // normal along x, y, z
      double pick = rng.uniform() * (faces[0] + faces[1] + faces[2]);
      int normal = 0;
      while (normal < 2 && pick >= faces[normal]) pick -= faces[normal++];
      for (int a = 0; a < 3; ++a) l[a] = rng.uniform(-0.5, 0.5) * s[a];
      l[normal] = (rng.uniform() < 0.5 ? -0.5 : 0.5) * s[normal];
      break;
    }
    case PrimitiveKind::kHemisphere: {
      // Archimedes: z is uniform on a sphere's surface.
      const double z = rng.uniform(-p.radius, 0.0);
      const double t = rng.uniform(0.0, 2.0 * kPi);
      const double r = std::sqrt(std::max(0.0, p.radius * p.radius - z * z));
      l = {r * std::cos(t), r * std::sin(t), z};
      break;
    }
  }
  return to_world(p, l);
}

double surface_residual(const Primitive& p, const Vec3& world) {
  const Vec3 l = to_local(p, world);
  switch (p.kind) {
    case PrimitiveKind::kCylinder: return l[0] * l[0] + l[1] * l[1] - p.radius * p.radius;
    case PrimitiveKind::kDisk: return l[2];
    case PrimitiveKind::kTorusArc: {
      const double q = std::sqrt(l[0] * l[0] + l[1] * l[1]) - p.radius;
      return q * q + l[2] * l[2] - p.minor_radius * p.minor_radius;
    }
    case PrimitiveKind::kBox: {
      double worst = 0.0;
      for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(l[a]) / p.size[a]);
      return worst - 0.5;
    }
    case PrimitiveKind::kHemisphere: return l[0] * l[0] + l[1] * l[1] + l[2] * l[2] - p.radius * p.radius;
  }
  return 0.0;
}

std::vector<std::string> builtin_templates() {
  return {"mug", "hammer", "knife", "bottle", "monitor", "bowl", "cylinder"};
}

std::vector<Primitive> instantiate_template(const std::string& base, Rng& rng) {
  const auto vary = [&rng](double v) { return v * rng.uniform(0.85, 1.15); };
  if (base == "mug") {
    const double r = vary(0.4);
    const double h = vary(0.9);
    Primitive handle;
    handle.kind = PrimitiveKind::kTorusArc;
    handle.radius = vary(0.22);
    handle.minor_radius = 0.04;
    handle.arc_begin = -kPi / 2.0;
    handle.arc_end = kPi / 2.0;
    handle.axis = 'y';
    handle.offset = {r, 0.0, 0.0};
    handle.label = "grasp";
    return {cylinder(r, h, {0, 0, 0}, "wrap-grasp"), disk(r, {0, 0, -h / 2.0}, "contain"), handle};
  }
  if (base == "hammer") {
    const double h = vary(1.0);
    return {cylinder(vary(0.05), h, {0, 0, 0}, "grasp"),
            box({vary(0.6), vary(0.16), vary(0.16)}, {0, 0, h / 2.0 + 0.05}, "pound")};
  }
  if (base == "knife") {
    const double grip = vary(0.35);
    const double blade = vary(0.6);
    return {box({vary(0.1), 0.04, grip}, {0, 0, -grip / 2.0}, "grasp"),
            box({vary(0.12), 0.01, blade}, {0, 0, blade / 2.0}, "cut")};
  }
  if (base == "bottle") {
    const double r = vary(0.3);
    const double h = vary(0.7);
    const double neck = vary(0.3);
    const double nr = vary(0.1);
    return {cylinder(r, h, {0, 0, 0}, "wrap-grasp"), disk(r, {0, 0, h / 2.0}, "wrap-grasp"),
            cylinder(nr, neck, {0, 0, h / 2.0 + neck / 2.0}, "grasp"), disk(nr, {0, 0, h / 2.0 + neck}, "contain")};
  }
  if (base == "monitor") {
    const double w = vary(1.0);
    const double sh = vary(0.6);
    const double stand = vary(0.35);
    return {box({w, 0.06, sh}, {0, 0, sh / 2.0}, "display"),
            cylinder(0.05, stand, {0, 0, -stand / 2.0}, "support"), disk(vary(0.3), {0, 0, -stand}, "support")};
  }
  if (base == "bowl") {
    Primitive shell;
    shell.kind = PrimitiveKind::kHemisphere;
    shell.radius = vary(0.5);
    shell.label = "contain";
    const double foot = 0.08;
    return {shell, cylinder(vary(0.2), foot, {0, 0, -shell.radius - foot / 2.0}, "support")};
  }
  if (base == "cylinder") return {cylinder(0.5, 1.0, {0, 0, 0}, "wrap-grasp")};
  throw_usage("unknown shape template '" + base + "'");
}

SyntheticSpec parse_synthetic_spec(const json& j) {
  static const std::set<std::string> known{"seed", "points_per_shape", "jitter", "labels", "seen_labels", "templates", "splits"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw_usage("synthetic spec: unknown key '" + key + "'");
  }
  SyntheticSpec spec;
  try {
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.points_per_shape = j.value("points_per_shape", std::size_t{512});
    spec.jitter = j.value("jitter", 0.0);
    if (j.contains("labels")) spec.labels = j.at("labels").get<std::vector<std::string>>();
    if (j.contains("seen_labels")) spec.seen_labels = j.at("seen_labels").get<std::vector<std::string>>();
    for (const auto& t : j.at("templates")) {
      TemplateSpec ts;
      ts.name = t.at("name").get<std::string>();
      ts.base = t.value("base", ts.name);
      if (t.contains("relabel")) ts.relabel = t.at("relabel").get<std::map<std::string, std::string>>();
      spec.templates.push_back(std::move(ts));
    }
    for (const auto& s : j.at("splits")) {
      SplitSpec ss;
      ss.name = s.at("name").get<std::string>();
      ss.count = s.at("count").get<std::size_t>();
      if (s.contains("templates")) ss.templates = s.at("templates").get<std::vector<std::string>>();
      spec.splits.push_back(std::move(ss));
    }
  } catch (const json::exception& e) {
    throw_usage(std::string("synthetic spec: ") + e.what());
  }
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open synthetic spec '" + path.string() + "'");
  try {
    return parse_synthetic_spec(json::parse(in));
  } catch (const json::parse_error& e) {
    throw_usage("synthetic spec '" + path.string() + "': " + e.what());
  }
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.jitter >= 0.0)) throw_usage("synthetic spec: jitter must be >= 0");
  if (spec.points_per_shape == 0) throw_usage("synthetic spec: points_per_shape must be positive");
  if (spec.templates.empty()) throw_usage("synthetic spec: no templates");

  // Part labels of every template after relabelling, to derive label sets.
  std::map<std::string, std::vector<std::string>> template_labels;
  std::vector<std::string> appearance;
  for (const auto& t : spec.templates) {
    if (template_labels.contains(t.name)) throw_usage("synthetic spec: duplicate template '" + t.name + "'");
    Rng probe(0);
    std::vector<std::string> labels;
    for (const auto& part : instantiate_template(t.base.empty() ? t.name : t.base, probe)) {
      auto it = t.relabel.find(part.label);
      const std::string label = it == t.relabel.end() ? part.label : it->second;
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
      if (std::find(appearance.begin(), appearance.end(), label) == appearance.end()) appearance.push_back(label);
    }
    template_labels[t.name] = labels;
  }

  SyntheticDataset out;
  DatasetManifest& manifest = out.manifest;
  manifest.labels = spec.labels.empty() ? appearance : spec.labels;
  for (const auto& l : appearance) {
    if (std::find(manifest.labels.begin(), manifest.labels.end(), l) == manifest.labels.end()) {
      throw_usage("synthetic spec: template label '" + l + "' missing from labels");
    }
  }
  if (manifest.labels.size() < 2) throw_usage("synthetic spec: at least 2 labels required");
  manifest.seen_labels = spec.seen_labels.value_or(manifest.labels);
  manifest.validate();

  const auto seen_only = [&](const std::string& name) {
    const auto& labels = template_labels.at(name);
    return std::all_of(labels.begin(), labels.end(), [&](const std::string& l) {
      return std::find(manifest.seen_labels.begin(), manifest.seen_labels.end(), l) != manifest.seen_labels.end();
    });
  };

  for (const auto& split : spec.splits) {
    if (out.shapes.contains(split.name)) throw_usage("synthetic spec: duplicate split '" + split.name + "'");
    std::vector<const TemplateSpec*> eligible;
    for (const auto& t : spec.templates) {
      const bool listed = split.templates.empty() ||
                          std::find(split.templates.begin(), split.templates.end(), t.name) != split.templates.end();
      if (!listed) continue;
      if (split.name == "train" && !seen_only(t.name)) continue;
      eligible.push_back(&t);
    }
    for (const auto& name : split.templates) {
      if (!template_labels.contains(name)) throw_usage("synthetic spec: split '" + split.name + "' names unknown template '" + name + "'");
    }
    if (eligible.empty() && split.count > 0) {
      if (split.name == "train") throw_data("cannot build training split: no template uses only seen labels");
      throw_usage("synthetic spec: split '" + split.name + "' has no templates");
    }

    auto& clouds = out.shapes[split.name];
    auto& paths = manifest.splits[split.name];
    for (std::size_t i = 0; i < split.count; ++i) {
      const TemplateSpec& t = *eligible[i % eligible.size()];
      Rng rng(derive_seed(spec.seed, {kShapeStream, name_tag(split.name), i}));
      const std::vector<Primitive> parts = instantiate_template(t.base.empty() ? t.name : t.base, rng);
      std::vector<double> cumulative;
      double total = 0.0;
      for (const auto& p : parts) cumulative.push_back(total += p.area());

      char name[256];
      std::snprintf(name, sizeof name, "%s_%04zu", split.name.c_str(), i);
      PointCloud cloud;
      cloud.id = name;
      for (std::size_t k = 0; k < spec.points_per_shape; ++k) {
        const double pick = rng.uniform() * total;
        std::size_t part = 0;
        while (part + 1 < parts.size() && pick >= cumulative[part]) ++part;
        Vec3 point = sample_surface(parts[part], rng);
        if (spec.jitter > 0.0) {
          for (double& c : point) c += spec.jitter * rng.gaussian();
        }
        auto it = t.relabel.find(parts[part].label);
        const std::string& label = it == t.relabel.end() ? parts[part].label : it->second;
        cloud.points.push_back(point);
        cloud.labels.push_back(static_cast<std::uint32_t>(*manifest.label_index(label)));
      }
      paths.push_back("shapes/" + std::string(name) + ".xyz");
      clouds.push_back(std::move(cloud));
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& dataset) {
  std::filesystem::create_directories(dir / "shapes");
  for (const auto& [split, paths] : dataset.manifest.splits) {
    const auto& clouds = dataset.shapes.at(split);
    for (std::size_t i = 0; i < paths.size(); ++i) write_shape(dir / paths[i], clouds[i]);
  }
  save_manifest(dir / "manifest.json", dataset.manifest);
}

EmbeddingTable synthetic_embeddings(const std::vector<std::string>& labels, std::size_t dim, std::uint64_t seed,
                                    const EmbeddingPlan& plan) {
  const std::size_t m = labels.size();
  if (m == 0) throw_usage("synthetic embeddings: no labels");
  if (dim < m) {
    throw_usage("synthetic embeddings: dimension " + std::to_string(dim) + " is smaller than label count " +
                std::to_string(m) + " (orthonormal rows impossible)");
  }
  {
    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() != m) throw_usage("synthetic embeddings: duplicate labels");
  }

  // Gram-Schmidt (two passes) over Gaussian vectors.
  Rng rng(derive_seed(seed, {kBasisStream}));
  Matrix basis(m, dim);
  for (std::size_t j = 0; j < m; ++j) {
    auto row = basis.row(j);
    for (double& v : row) v = rng.gaussian();
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        const auto prev = basis.row(k);
        double dot = 0.0;
        for (std::size_t c = 0; c < dim; ++c) dot += row[c] * prev[c];
        for (std::size_t c = 0; c < dim; ++c) row[c] -= dot * prev[c];
      }
      double norm = 0.0;
      for (double v : row) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
  }

  EmbeddingTable table;
  table.labels = labels;
  table.vectors = basis;
  table.source = plan.kind == EmbeddingPlan::Kind::kOrthonormal ? "synthetic:orthonormal" : "synthetic:paired";
  if (plan.kind == EmbeddingPlan::Kind::kPaired) {
    std::set<std::string> used;
    const auto index = [&](const std::string& l) {
      auto it = std::find(labels.begin(), labels.end(), l);
      if (it == labels.end()) throw_usage("infeasible embedding plan: unknown label '" + l + "'");
      return static_cast<std::size_t>(it - labels.begin());
    };
    for (const auto& pair : plan.pairs) {
      if (!(std::abs(pair.cosine) <= 1.0)) throw_usage("infeasible embedding plan: |cosine| > 1");
      if (pair.anchor == pair.partner) throw_usage("infeasible embedding plan: label paired with itself");
      if (!used.insert(pair.anchor).second || !used.insert(pair.partner).second) {
        throw_usage("infeasible embedding plan: label appears in more than one pair");
      }
      const std::size_t a = index(pair.anchor);
      const std::size_t b = index(pair.partner);
      const double c = pair.cosine;
      const double s = std::sqrt(1.0 - c * c);
      for (std::size_t k = 0; k < dim; ++k) table.vectors(b, k) = c * basis(a, k) + s * basis(b, k);
    }
  }
  return table;
}

}  // namespace openad

#include "openad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "openad/error.hpp"

namespace openad {

using nlohmann::json;

void DatasetManifest::validate() const {
  if (format_version != kManifestFormatVersion) {
    throw_data("manifest: unsupported format_version " + std::to_string(format_version));
  }
  if (labels.empty()) throw_data("manifest: no labels");
  std::unordered_set<std::string> names;
  for (const auto& l : labels) {
    if (l.empty()) throw_data("manifest: empty label name");
    if (!names.insert(l).second) throw_data("manifest: duplicate label '" + l + "'");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : seen_labels) {
    if (!names.contains(l)) throw_data("manifest: seen label '" + l + "' is not in labels");
    if (!seen.insert(l).second) throw_data("manifest: duplicate seen label '" + l + "'");
  }
}

std::optional<std::size_t> DatasetManifest::label_index(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

bool DatasetManifest::is_seen(std::size_t label_id) const {
  return label_id < labels.size() &&
         std::find(seen_labels.begin(), seen_labels.end(), labels[label_id]) != seen_labels.end();
}

std::vector<std::size_t> DatasetManifest::seen_ids() const {
  std::vector<std::size_t> ids;
  for (const auto& l : seen_labels) ids.push_back(*label_index(l));
  return ids;
}

const std::vector<std::string>& DatasetManifest::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw_data("manifest has no split '" + name + "'");
  return it->second;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    for (const auto& [key, _] : j.items()) {
      if (key != "format_version" && key != "labels" && key != "seen_labels" && key != "splits") {
        throw_data("manifest: unknown key '" + key + "'");
      }
    }
    m.format_version = j.at("format_version").get<int>();
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.seen_labels = j.contains("seen_labels") ? j.at("seen_labels").get<std::vector<std::string>>() : m.labels;
    m.splits = j.at("splits").get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw_data("manifest '" + path.string() + "': " + e.what());
  }
  m.root = path.parent_path();
  m.validate();
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  manifest.validate();
  const json j{{"format_version", manifest.format_version},
               {"labels", manifest.labels},
               {"seen_labels", manifest.seen_labels},
               {"splits", manifest.splits}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("cannot write manifest '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

namespace {

template <typename T>
bool parse_token(std::string_view token, T& value) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

ShapeRecord load_shape(const std::filesystem::path& path, std::optional<std::size_t> num_labels,
                       LabelColumn label_column) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open shape file '" + path.string() + "'");
  ShapeRecord record;
  record.source = path;
  record.cloud.id = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  std::optional<bool> labelled;
  const auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::vector<std::string_view> tokens;
    std::string_view rest(line);
    for (;;) {
      const auto b = rest.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) break;
      rest.remove_prefix(b);
      const auto e = rest.find_first_of(" \t\r");
      tokens.push_back(rest.substr(0, e));
      if (e == std::string_view::npos) break;
      rest.remove_prefix(e);
    }
    if (tokens.empty()) continue;
    const bool has_label = tokens.size() == 4;
    if (!(tokens.size() == 4 || (tokens.size() == 3 && label_column == LabelColumn::kOptional))) {
      throw_data(where() + ": malformed line (expected 'x y z label_id')");
    }
    if (labelled && *labelled != has_label) throw_data(where() + ": inconsistent label column");
    labelled = has_label;
    Vec3 p{};
    for (int a = 0; a < 3; ++a) {
      if (!parse_token(tokens[a], p[a]) || !std::isfinite(p[a])) {
        throw_data(where() + ": malformed coordinate '" + std::string(tokens[a]) + "'");
      }
    }
    record.cloud.points.push_back(p);
    if (has_label) {
      std::uint32_t id = 0;
      if (!parse_token(tokens[3], id)) throw_data(where() + ": malformed label id '" + std::string(tokens[3]) + "'");
      if (num_labels && id >= *num_labels) {
        throw_data(where() + ": label id " + std::to_string(id) + " out of range [0, " + std::to_string(*num_labels) + ")");
      }
      record.cloud.labels.push_back(id);
    }
  }
  if (record.cloud.points.empty()) throw_data("empty shape: '" + path.string() + "'");
  return record;
}

std::string format_shape(const PointCloud& cloud) {
  validate(cloud);
  std::string out;
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // Round to float32 first so that the text re-parses to the same float.
    const auto& q = cloud.points[i];
    const double p[3] = {static_cast<float>(q[0]), static_cast<float>(q[1]), static_cast<float>(q[2])};
    int len = cloud.has_labels()
                  ? std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u\n", p[0], p[1], p[2], cloud.labels[i])
                  : std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p[0], p[1], p[2]);
    out.append(buf, static_cast<std::size_t>(len));
  }
  return out;
}

void write_shape(const std::filesystem::path& path, const PointCloud& cloud) {
  const std::string text = format_shape(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write shape file '" + path.string() + "'");
  out << text;
}

std::vector<ShapeRecord> load_split(const DatasetManifest& manifest, const std::string& split) {
  std::vector<ShapeRecord> shapes;
  for (const auto& rel : manifest.split(split)) {
    ShapeRecord record = load_shape(manifest.root / rel, manifest.labels.size());
    if (split == "train") {
      for (std::uint32_t id : record.cloud.labels) {
        if (!manifest.is_seen(id)) {
          throw_data("train shape '" + rel + "' contains unseen label '" + manifest.labels[id] + "'");
        }
      }
    }
    shapes.push_back(std::move(record));
  }
  return shapes;
}

std::vector<std::uint64_t> count_labels(const std::vector<ShapeRecord>& shapes, std::size_t num_labels) {
  std::vector<std::uint64_t> counts(num_labels, 0);
  for (const auto& s : shapes) {
    for (std::uint32_t id : s.cloud.labels) counts.at(id) += 1;
  }
  return counts;
}

}  // namespace openad

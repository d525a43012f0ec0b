#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "openad/geometry.hpp"

namespace openad {

inline constexpr int kManifestFormatVersion = 1;

/// Dataset description. Label order defines the ground-truth ids used in
/// shape files; `seen_labels` are the only labels allowed in the train split.
///
///   {
///     "format_version": 1,
///     "labels": ["grasp", "contain", ...],
///     "seen_labels": ["grasp", ...],
///     "splits": {"train": ["shapes/train_0000.xyz", ...], "test": [...]}
///   }
///
/// Shape paths are relative to the manifest's directory.
struct DatasetManifest {
  int format_version = kManifestFormatVersion;
  std::vector<std::string> labels;
  std::vector<std::string> seen_labels;
  std::map<std::string, std::vector<std::string>> splits;
  std::filesystem::path root;  // directory used to resolve shape paths

  /// Throws Error(kData): empty or duplicate labels, seen label not in
  /// labels, unsupported version.
  void validate() const;

  std::optional<std::size_t> label_index(const std::string& label) const;
  bool is_seen(std::size_t label_id) const;
  /// Ids of seen_labels, in seen_labels order.
  std::vector<std::size_t> seen_ids() const;
  const std::vector<std::string>& split(const std::string& name) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct ShapeRecord {
  PointCloud cloud;
  std::filesystem::path source;
};

enum class LabelColumn { kRequired, kOptional };

/// ASCII shape file: one point per line, `x y z label_id`, whitespace
/// separated; blank lines and `#` comments are ignored. With
/// LabelColumn::kOptional, every line may instead carry just `x y z`.
/// Errors name the offending line.
ShapeRecord load_shape(const std::filesystem::path& path, std::optional<std::size_t> num_labels = std::nullopt,
                       LabelColumn label_column = LabelColumn::kRequired);

/// Rounds coordinates to float32 and writes 9 significant digits, which
/// re-parse to the same float.
void write_shape(const std::filesystem::path& path, const PointCloud& cloud);
std::string format_shape(const PointCloud& cloud);

/// Loads every shape of a split with label ids checked against the
/// manifest. Shapes of the "train" split must contain only seen labels.
std::vector<ShapeRecord> load_split(const DatasetManifest& manifest, const std::string& split);

/// Per-label point counts over a set of shapes, indexed by manifest id.
std::vector<std::uint64_t> count_labels(const std::vector<ShapeRecord>& shapes, std::size_t num_labels);

}  // namespace openad

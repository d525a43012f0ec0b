#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "openad/checkpoint.hpp"
#include "openad/dataset.hpp"
#include "openad/head.hpp"
#include "openad/metrics.hpp"

namespace openad {

enum class EvalMode {
  kClosedSet,       // label set = training label set
  kOpenVocabulary,  // any label table covering the test ground truth
};

EvalMode parse_eval_mode(const std::string& name);  // "closed" | "open"
std::string eval_mode_name(EvalMode mode);

struct ProtocolOptions {
  EvalMode mode = EvalMode::kClosedSet;
  std::size_t points = 2048;  // points per cloud after resampling
  std::uint64_t seed = 0;     // upsampling stream
  std::size_t threads = 1;
};

/// Label table actually used for a protocol run.
///   closed: the training labels, in training order; throws Error(kUsage) if
///           `table` lacks any of them.
///   open:   `table` unchanged.
EmbeddingTable protocol_table(const Checkpoint& checkpoint, const EmbeddingTable& table, EvalMode mode);

/// Resamples, normalizes and detects every shape, then scores the argmax
/// against ground truth in the label space of protocol_table(). Ground-truth
/// labels are matched to table rows by name; a ground-truth label missing
/// from the table is an Error(kUsage) (in closed mode: a mode/label
/// mismatch). An empty shape list is an Error(kData).
MetricsReport run_protocol(const Checkpoint& checkpoint, const DatasetManifest& manifest,
                           const std::vector<ShapeRecord>& shapes, const EmbeddingTable& table,
                           const ProtocolOptions& options);

/// Same pipeline on an in-memory model and an already-resolved table;
/// `ground_truth_to_table` maps manifest ids to table rows.
ConfusionMatrix evaluate_shapes(const Model& model, const std::vector<ShapeRecord>& shapes, const EmbeddingTable& table,
                                const std::vector<std::size_t>& ground_truth_to_table, std::size_t points,
                                std::uint64_t seed, std::size_t threads);

/// Resample to `points`, then center and scale.
PointCloud prepare_cloud(const PointCloud& cloud, std::size_t points, std::uint64_t seed);

}  // namespace openad

#include "openad/protocol.hpp"

#include <limits>

#include "openad/error.hpp"
#include "openad/model.hpp"
#include "openad/parallel.hpp"
#include "openad/random.hpp"

namespace openad {

namespace {
constexpr std::uint64_t kEvalStream = 0xe7a1;
constexpr std::size_t kUnmapped = std::numeric_limits<std::size_t>::max();
}  // namespace

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "closed") return EvalMode::kClosedSet;
  if (name == "open") return EvalMode::kOpenVocabulary;
  throw_usage("unknown evaluation mode '" + name + "' (expected closed or open)");
}

std::string eval_mode_name(EvalMode mode) { return mode == EvalMode::kClosedSet ? "closed" : "open"; }

PointCloud prepare_cloud(const PointCloud& cloud, std::size_t points, std::uint64_t seed) {
  return center_and_scale(resample_to_n(cloud, points, seed)).cloud;
}

EmbeddingTable protocol_table(const Checkpoint& checkpoint, const EmbeddingTable& table, EvalMode mode) {
  table.validate();
  if (table.dim() != checkpoint.model.embedding_dim()) {
    throw_usage("embedding dimension " + std::to_string(table.dim()) + " does not match checkpoint dimension " +
                std::to_string(checkpoint.model.embedding_dim()));
  }
  if (mode == EvalMode::kOpenVocabulary) return table;
  for (const auto& l : checkpoint.labels) {
    if (!table.find(l)) throw_usage("closed-set mode: training label '" + l + "' missing from the label table");
  }
  return table.select(checkpoint.labels);
}

ConfusionMatrix evaluate_shapes(const Model& model, const std::vector<ShapeRecord>& shapes, const EmbeddingTable& table,
                                const std::vector<std::size_t>& ground_truth_to_table, std::size_t points,
                                std::uint64_t seed, std::size_t threads) {
  std::vector<ConfusionMatrix> partial(shapes.size(), ConfusionMatrix(table.size()));
  parallel_for(shapes.size(), threads, [&](std::size_t s) {
    const PointCloud cloud = prepare_cloud(shapes[s].cloud, points, derive_seed(seed, {kEvalStream, s}));
    const AffordanceMap map = detect(model, cloud, table);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const std::size_t truth = ground_truth_to_table.at(cloud.labels.at(i));
      if (truth == kUnmapped) throw_usage("ground-truth label of shape '" + shapes[s].cloud.id + "' missing from label table");
      partial[s].add(truth, map.assignment[i]);
    }
  });
  ConfusionMatrix total(table.size());
  for (const auto& cm : partial) total.merge(cm);
  return total;
}

MetricsReport run_protocol(const Checkpoint& checkpoint, const DatasetManifest& manifest,
                           const std::vector<ShapeRecord>& shapes, const EmbeddingTable& table,
                           const ProtocolOptions& options) {
  if (shapes.empty()) throw_data("evaluation split is empty");
  const EmbeddingTable used = protocol_table(checkpoint, table, options.mode);

  std::vector<std::size_t> mapping(manifest.labels.size(), kUnmapped);
  for (std::size_t id = 0; id < manifest.labels.size(); ++id) {
    if (auto j = used.find(manifest.labels[id])) mapping[id] = *j;
  }
  for (const auto& shape : shapes) {
    for (std::uint32_t id : shape.cloud.labels) {
      if (id >= mapping.size()) throw_data("label id out of range in shape '" + shape.cloud.id + "'");
      if (mapping[id] == kUnmapped) {
        throw_usage(std::string(options.mode == EvalMode::kClosedSet ? "closed-set mode" : "open-vocabulary mode") +
                    ": test label '" + manifest.labels[id] + "' is not in the evaluated label set");
      }
    }
  }
  const ConfusionMatrix cm =
      evaluate_shapes(checkpoint.model, shapes, used, mapping, options.points, options.seed, options.threads);
  return compute_metrics(cm, used.labels);
}

}  // namespace openad

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "openad/adam.hpp"
#include "openad/checkpoint.hpp"
#include "openad/dataset.hpp"
#include "openad/encoder.hpp"
#include "openad/head.hpp"

namespace openad {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  std::size_t points = 2048;  // points per cloud after resampling
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;  // validation cadence in epochs; 0 disables
  std::size_t threads = 1;     // results do not depend on this
  EncoderConfig encoder{};     // encoder.output_dim is the embedding dimension D
  AdamConfig adam{};
  TemperatureMode temperature = TemperatureMode::kLogScale;

  /// CI-sized profile: 512 points, D = 64, 30 epochs, narrow encoder.
  static TrainConfig desk_profile();

  void validate() const;

  /// Flat JSON form; keys: epochs, batch_size, points, embed_dim, seed,
  /// eval_every, threads, learning_rate, weight_decay, beta1, beta2,
  /// epsilon, decoupled_weight_decay, point_widths, fuse_widths,
  /// bn_momentum, bn_epsilon, temperature ("log-scale" | "literal").
  nlohmann::json to_json() const;
  /// Overrides the fields present in `j` on top of `*this`; unknown keys
  /// are rejected with Error(kUsage).
  void apply_json(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::optional<double> val_miou;

  nlohmann::json to_json() const;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains the encoder and logit scale against the frozen `table` rows of
/// the manifest's seen labels. Each epoch shuffles the shapes with its own
/// seeded stream; each batch resamples and normalizes its clouds, sums
/// cloud losses into a batch mean, backpropagates and takes one Adam step.
/// Class weights are computed once from the training point counts.
/// `val_shapes`, if given, is scored (closed-set mIoU, shapes with unseen
/// labels skipped) every `eval_every` epochs.
TrainResult train(const TrainConfig& config, const DatasetManifest& manifest,
                  const std::vector<ShapeRecord>& train_shapes, const EmbeddingTable& table,
                  const std::vector<ShapeRecord>* val_shapes = nullptr, const EpochCallback& on_epoch = {});

/// Training label table (seen labels, manifest seen order) and the class
/// weights derived from `train_shapes`.
EmbeddingTable training_table(const DatasetManifest& manifest, const EmbeddingTable& table);
ClassWeights training_class_weights(const DatasetManifest& manifest, const std::vector<ShapeRecord>& train_shapes);

}  // namespace openad

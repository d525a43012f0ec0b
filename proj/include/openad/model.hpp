#pragma once

#include <string>
#include <vector>

#include "openad/encoder.hpp"
#include "openad/geometry.hpp"
#include "openad/head.hpp"
#include "openad/parameters.hpp"

namespace openad {

inline constexpr const char* kLogitScaleParam = "head.logit_scale";

/// Point encoder plus the learnable softmax scale, sharing one store.
struct Model {
  Encoder encoder;
  ParameterStore params;
  TemperatureMode temperature = TemperatureMode::kLogScale;

  /// Fresh parameters from config.seed; the scale parameter starts at ln(1/0.07).
  static Model create(const EncoderConfig& config, TemperatureMode temperature = TemperatureMode::kLogScale);

  LogitScale logit_scale() const;
  std::size_t embedding_dim() const { return encoder.config().output_dim; }
};

/// Eval-mode encoding, correlation against an arbitrary label table, and
/// scaled softmax. `cloud` should already be resampled and normalized.
AffordanceMap detect(const Model& model, const PointCloud& cloud, const EmbeddingTable& table);

/// Train-mode pass over a batch of labelled clouds. Batch norm statistics
/// span all points of the batch; the objective is the mean of the per-cloud
/// losses. When `grads` is non-null the gradient of that mean is accumulated
/// into it. The tape feeds Encoder::commit_running_stats.
struct BatchPass {
  double loss = 0.0;                // mean over clouds
  std::vector<double> cloud_losses;
  EncoderTape tape;
};

BatchPass train_batch(const Model& model, const std::vector<PointCloud>& clouds, const EmbeddingTable& table,
                      const ClassWeights& weights, GradientSet* grads);

}  // namespace openad

#include "openad/model.hpp"

#include "openad/error.hpp"

namespace openad {

Model Model::create(const EncoderConfig& config, TemperatureMode temperature) {
  Model model{Encoder(config), ParameterStore{}, temperature};
  model.encoder.init_parameters(model.params);
  model.params.add(kLogitScaleParam, Matrix(1, 1, kInitialLogitScale), true);
  return model;
}

LogitScale Model::logit_scale() const {
  return LogitScale{params.at(kLogitScaleParam).value(0, 0), temperature};
}

AffordanceMap detect(const Model& model, const PointCloud& cloud, const EmbeddingTable& table) {
  table.validate();
  if (table.dim() != model.embedding_dim()) {
    throw_usage("checkpoint embedding dimension " + std::to_string(model.embedding_dim()) +
                " does not match label embedding dimension " + std::to_string(table.dim()));
  }
  const EncodedCloud encoded = encode_points(model.encoder, model.params, cloud, nn::Mode::kEval);
  return scaled_softmax(correlate(encoded.features, table), model.logit_scale(), table.labels);
}

namespace {

void require_labels(const PointCloud& cloud, const EmbeddingTable& table, const Model& model) {
  if (!cloud.has_labels()) throw_data("training cloud '" + cloud.id + "' has no labels");
  validate(cloud, table.size());
  if (table.dim() != model.embedding_dim()) throw_usage("embedding dimension does not match the encoder");
}

}  // namespace

BatchPass train_batch(const Model& model, const std::vector<PointCloud>& clouds, const EmbeddingTable& table,
                      const ClassWeights& weights, GradientSet* grads) {
  if (clouds.empty()) throw_usage("training batch is empty");
  std::vector<std::size_t> segments;
  std::size_t total = 0;
  for (const PointCloud& cloud : clouds) {
    require_labels(cloud, table, model);
    segments.push_back(cloud.size());
    total += cloud.size();
  }
  Matrix coords(total, 3);
  std::size_t row = 0;
  for (const PointCloud& cloud : clouds) {
    for (const Vec3& p : cloud.points) {
      for (std::size_t a = 0; a < 3; ++a) coords(row, a) = p[a];
      ++row;
    }
  }

  BatchPass pass;
  const Matrix features = model.encoder.forward_batch(model.params, coords, segments, nn::Mode::kTrain, &pass.tape);
  const double inv_count = 1.0 / static_cast<double>(clouds.size());
  const LogitScale scale = model.logit_scale();
  Matrix grad_features(features.rows(), features.cols());
  double grad_scale = 0.0;
  row = 0;
  for (std::size_t c = 0; c < clouds.size(); ++c) {
    const std::size_t n = segments[c];
    Matrix f(n, features.cols());
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(features.row(row + i).begin(), features.row(row + i).end(), f.row(i).begin());
    }
    HeadLoss head = head_loss(f, table, scale, clouds[c].labels, weights);
    pass.cloud_losses.push_back(head.loss);
    pass.loss += head.loss * inv_count;
    grad_scale += head.grad_scale_value * inv_count;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < f.cols(); ++j) grad_features(row + i, j) = head.grad_features(i, j) * inv_count;
    }
    row += n;
  }
  if (grads != nullptr) {
    (*grads)[model.params.index_of(kLogitScaleParam)](0, 0) += grad_scale;
    model.encoder.backward(model.params, pass.tape, grad_features, *grads);
  }
  return pass;
}

}  // namespace openad

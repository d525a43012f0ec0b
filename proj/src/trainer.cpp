#include "openad/trainer.hpp"

#include <cmath>
#include <set>

#include "openad/error.hpp"
#include "openad/model.hpp"
#include "openad/parallel.hpp"
#include "openad/protocol.hpp"
#include "openad/random.hpp"

namespace openad {

using nlohmann::json;

namespace {
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kResampleStream = 0x7e5a;
constexpr std::uint64_t kValStream = 0x7a1d;

// Manifest id -> index in the training label order (seen labels only).
std::vector<std::size_t> seen_index_map(const DatasetManifest& manifest) {
  std::vector<std::size_t> map(manifest.labels.size(), manifest.seen_labels.size());
  const auto ids = manifest.seen_ids();
  for (std::size_t k = 0; k < ids.size(); ++k) map[ids[k]] = k;
  return map;
}

PointCloud relabel_to_training(const PointCloud& cloud, const std::vector<std::size_t>& map, std::size_t seen) {
  PointCloud out = cloud;
  for (auto& l : out.labels) {
    if (map.at(l) >= seen) throw_data("training shape '" + cloud.id + "' contains an unseen label");
    l = static_cast<std::uint32_t>(map[l]);
  }
  return out;
}
}  // namespace

TrainConfig TrainConfig::desk_profile() {
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 8;
  c.points = 512;
  c.encoder.point_widths = {3, 32, 64};
  c.encoder.fuse_widths = {128, 64};
  c.encoder.output_dim = 64;
  return c;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw_usage("batch_size must be positive");
  if (points < 2) throw_usage("points must be at least 2 (batch norm over points)");
  if (threads == 0) throw_usage("threads must be positive");
  if (!(adam.learning_rate > 0.0)) throw_usage("learning_rate must be positive");
  if (!(adam.weight_decay >= 0.0)) throw_usage("weight_decay must be non-negative");
  encoder.validate();
}

json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"points", points},
          {"embed_dim", encoder.output_dim},
          {"seed", seed},
          {"eval_every", eval_every},
          {"learning_rate", adam.learning_rate},
          {"weight_decay", adam.weight_decay},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"decoupled_weight_decay", adam.decoupled_weight_decay},
          {"point_widths", encoder.point_widths},
          {"fuse_widths", encoder.fuse_widths},
          {"bn_momentum", encoder.batch_norm.momentum},
          {"bn_epsilon", encoder.batch_norm.epsilon},
          {"temperature", temperature_mode_name(temperature)}};
}

void TrainConfig::apply_json(const json& j) {
  if (!j.is_object()) throw_usage("training config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") epochs = v.get<std::size_t>();
      else if (key == "batch_size") batch_size = v.get<std::size_t>();
      else if (key == "points") points = v.get<std::size_t>();
      else if (key == "embed_dim") encoder.output_dim = v.get<std::size_t>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "eval_every") eval_every = v.get<std::size_t>();
      else if (key == "threads") threads = v.get<std::size_t>();
      else if (key == "learning_rate") adam.learning_rate = v.get<double>();
      else if (key == "weight_decay") adam.weight_decay = v.get<double>();
      else if (key == "beta1") adam.beta1 = v.get<double>();
      else if (key == "beta2") adam.beta2 = v.get<double>();
      else if (key == "epsilon") adam.epsilon = v.get<double>();
      else if (key == "decoupled_weight_decay") adam.decoupled_weight_decay = v.get<bool>();
      else if (key == "point_widths") encoder.point_widths = v.get<std::vector<std::size_t>>();
      else if (key == "fuse_widths") encoder.fuse_widths = v.get<std::vector<std::size_t>>();
      else if (key == "bn_momentum") encoder.batch_norm.momentum = v.get<double>();
      else if (key == "bn_epsilon") encoder.batch_norm.epsilon = v.get<double>();
      else if (key == "temperature") temperature = parse_temperature_mode(v.get<std::string>());
      else throw_usage("unknown training config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw_usage(std::string("training config: ") + e.what());
  }
}

json EpochRecord::to_json() const {
  json j{{"epoch", epoch}, {"mean_loss", mean_loss}};
  if (val_miou) j["val_mIoU"] = *val_miou;
  return j;
}

EmbeddingTable training_table(const DatasetManifest& manifest, const EmbeddingTable& table) {
  table.validate();
  return table.select(manifest.seen_labels);
}

ClassWeights training_class_weights(const DatasetManifest& manifest, const std::vector<ShapeRecord>& train_shapes) {
  const auto all = count_labels(train_shapes, manifest.labels.size());
  std::vector<std::uint64_t> counts;
  for (std::size_t id : manifest.seen_ids()) counts.push_back(all[id]);
  return class_weights(counts);
}

TrainResult train(const TrainConfig& config, const DatasetManifest& manifest,
                  const std::vector<ShapeRecord>& train_shapes, const EmbeddingTable& table,
                  const std::vector<ShapeRecord>* val_shapes, const EpochCallback& on_epoch) {
  config.validate();
  manifest.validate();
  if (manifest.seen_labels.empty()) throw_data("manifest has no seen labels to train on");
  if (train_shapes.empty() && config.epochs > 0) throw_data("training split is empty");

  const EmbeddingTable train_table = training_table(manifest, table);
  if (train_table.dim() != config.encoder.output_dim) {
    throw_usage("embedding dimension " + std::to_string(train_table.dim()) + " does not match embed_dim " +
                std::to_string(config.encoder.output_dim));
  }
  const auto seen_map = seen_index_map(manifest);
  std::vector<PointCloud> clouds;
  clouds.reserve(train_shapes.size());
  for (const auto& s : train_shapes) {
    validate(s.cloud, manifest.labels.size());
    if (!s.cloud.has_labels()) throw_data("training shape '" + s.cloud.id + "' has no labels");
    clouds.push_back(relabel_to_training(s.cloud, seen_map, manifest.seen_labels.size()));
  }
  const ClassWeights weights = training_class_weights(manifest, train_shapes);

  EncoderConfig encoder_config = config.encoder;
  encoder_config.seed = derive_seed(config.seed, {kInitStream});
  TrainResult result{Checkpoint{Model::create(encoder_config, config.temperature), manifest.seen_labels, {}}, {}};
  Model& model = result.checkpoint.model;
  Adam optimizer(config.adam);

  // Validation: closed-set over shapes whose labels are all seen.
  std::vector<ShapeRecord> val_closed;
  if (val_shapes != nullptr) {
    for (const auto& s : *val_shapes) {
      bool ok = true;
      for (auto l : s.cloud.labels) ok = ok && l < seen_map.size() && seen_map[l] < manifest.seen_labels.size();
      if (ok) val_closed.push_back(s);
    }
  }

  std::vector<std::size_t> order(clouds.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle(derive_seed(config.seed, {kShuffleStream, epoch}));
    shuffle.shuffle(order.begin(), order.end());

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t count = std::min(config.batch_size, order.size() - begin);
      std::vector<PointCloud> batch(count);
      parallel_for(count, config.threads, [&](std::size_t b) {
        const std::size_t idx = order[begin + b];
        batch[b] = prepare_cloud(clouds[idx], config.points, derive_seed(config.seed, {kResampleStream, epoch, idx}));
      });
      GradientSet grads = model.params.make_gradient_set();
      BatchPass pass;
      try {
        pass = train_batch(model, batch, train_table, weights, &grads);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        throw_numeric("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) + ": " + e.what());
      }
      for (double loss : pass.cloud_losses) {
        if (!std::isfinite(loss)) {
          throw_numeric("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index));
        }
        epoch_loss += loss;
      }
      model.params.accumulate(grads);
      model.encoder.commit_running_stats(model.params, pass.tape);
      try {
        optimizer.step(model.params);
      } catch (const Error& e) {
        throw_numeric("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(model.params.at(kLogitScaleParam).value(0, 0))) {
        throw_numeric("logit scale diverged at epoch " + std::to_string(epoch));
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = epoch_loss / static_cast<double>(clouds.size());
    if (config.eval_every > 0 && epoch % config.eval_every == 0 && !val_closed.empty()) {
      const ConfusionMatrix cm =
          evaluate_shapes(model, val_closed, train_table, seen_map, config.points,
                          derive_seed(config.seed, {kValStream}), config.threads);
      record.val_miou = compute_metrics(cm, train_table.labels).miou;
    }
    result.log.push_back(record);
    result.checkpoint.metadata.loss_history.push_back(record.mean_loss);
    if (on_epoch) on_epoch(record);
  }

  result.checkpoint.metadata.epochs = config.epochs;
  result.checkpoint.metadata.seed = config.seed;
  result.checkpoint.metadata.train_config = config.to_json();
  return result;
}

}  // namespace openad

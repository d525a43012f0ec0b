#include "openad/encoder.hpp"

#include <cmath>

#include "openad/error.hpp"
#include "openad/gradcheck.hpp"
#include "openad/random.hpp"

namespace openad {

namespace {
constexpr std::uint64_t kInitStream = 0x1a17;
}

void EncoderConfig::validate() const {
  if (point_widths.size() < 2) throw_usage("encoder needs at least one per-point layer");
  if (point_widths.front() != 3) throw_usage("first per-point width must be 3 (xyz)");
  if (fuse_widths.empty()) throw_usage("fuse widths must start with the concat width");
  if (fuse_widths.front() != 2 * global_width()) {
    throw_usage("concat width " + std::to_string(fuse_widths.front()) +
                " must equal local + global width " + std::to_string(2 * global_width()));
  }
  for (std::size_t w : point_widths) {
    if (w == 0) throw_usage("encoder widths must be positive");
  }
  for (std::size_t w : fuse_widths) {
    if (w == 0) throw_usage("encoder widths must be positive");
  }
  if (output_dim == 0) throw_usage("output dimension must be positive");
  if (!(batch_norm.epsilon > 0.0) || !(batch_norm.momentum >= 0.0 && batch_norm.momentum <= 1.0)) {
    throw_usage("invalid batch norm options");
  }
}

Encoder::Encoder(EncoderConfig config) : config_(std::move(config)) {
  config_.validate();
  for (std::size_t k = 0; k + 1 < config_.point_widths.size(); ++k) {
    layers_.push_back({"point." + std::to_string(k), config_.point_widths[k], config_.point_widths[k + 1], true});
  }
  point_layer_count_ = layers_.size();
  for (std::size_t k = 0; k + 1 < config_.fuse_widths.size(); ++k) {
    layers_.push_back({"fuse." + std::to_string(k), config_.fuse_widths[k], config_.fuse_widths[k + 1], true});
  }
  layers_.push_back({"embed", config_.fuse_widths.back(), config_.output_dim, false});
}

void Encoder::init_parameters(ParameterStore& store) const {
  Rng rng(derive_seed(config_.seed, {kInitStream}));
  for (const LayerSpec& layer : layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
    Matrix weight(layer.in, layer.out);
    for (double& w : weight.values()) w = rng.uniform(-bound, bound);
    store.add(layer.weight(), std::move(weight), true);
    store.add(layer.bias(), Matrix(1, layer.out, 0.0), true);
    store.add(layer.gain(), Matrix(1, layer.out, 1.0), true);
    store.add(layer.shift(), Matrix(1, layer.out, 0.0), true);
    store.add(layer.running_mean(), Matrix(1, layer.out, 0.0), false);
    store.add(layer.running_var(), Matrix(1, layer.out, 1.0), false);
  }
}

Matrix Encoder::forward(const ParameterStore& params, const Matrix& coords, nn::Mode mode,
                        EncoderTape* tape) const {
  return forward_batch(params, coords, {coords.rows()}, mode, tape);
}

Matrix Encoder::forward_batch(const ParameterStore& params, const Matrix& coords,
                              const std::vector<std::size_t>& segments, nn::Mode mode, EncoderTape* tape) const {
  if (coords.cols() != 3) throw_usage("encoder expects n x 3 coordinates, got " + coords.shape_string());
  std::size_t total = 0;
  for (std::size_t n : segments) {
    if (n == 0) throw_usage("encoder received an empty cloud");
    total += n;
  }
  if (total != coords.rows()) throw_usage("cloud sizes do not add up to the coordinate rows");
  EncoderTape local_tape;
  EncoderTape& t = tape != nullptr ? *tape : local_tape;
  t.layers.assign(layers_.size(), {});
  t.segments = segments;
  t.pool_argmax.assign(segments.size(), {});

  Matrix x = coords;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const LayerSpec& layer = layers_[k];
    if (k == point_layer_count_) {
      // [local | global of its own cloud] for every point.
      const std::size_t g = x.cols();
      Matrix fused(x.rows(), 2 * g);
      std::size_t row = 0;
      for (std::size_t s = 0; s < segments.size(); ++s) {
        Matrix cloud(segments[s], g);
        for (std::size_t i = 0; i < segments[s]; ++i) {
          std::copy(x.row(row + i).begin(), x.row(row + i).end(), cloud.row(i).begin());
        }
        const Matrix global = nn::max_pool_forward(cloud, t.pool_argmax[s]);
        for (std::size_t i = 0; i < segments[s]; ++i, ++row) {
          for (std::size_t j = 0; j < g; ++j) {
            fused(row, j) = x(row, j);
            fused(row, g + j) = global(0, j);
          }
        }
      }
      x = std::move(fused);
    }
    auto& lt = t.layers[k];
    const Matrix pre = nn::linear_forward(x, params.at(layer.weight()).value, params.at(layer.bias()).value);
    Matrix bn_out = nn::batch_norm_forward(pre, params.at(layer.gain()).value, params.at(layer.shift()).value,
                                           mode, params.at(layer.running_mean()).value,
                                           params.at(layer.running_var()).value, config_.batch_norm, lt.bn);
    lt.input = std::move(x);
    if (layer.relu) {
      x = nn::relu_forward(bn_out);
      lt.normalized_out = std::move(bn_out);
    } else {
      x = std::move(bn_out);
    }
  }
  return x;
}

void Encoder::backward(const ParameterStore& params, const EncoderTape& tape, const Matrix& grad_features,
                       GradientSet& grads) const {
  if (tape.layers.size() != layers_.size()) throw_usage("encoder tape does not match the network");
  Matrix g = grad_features;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const LayerSpec& layer = layers_[k];
    const auto& lt = tape.layers[k];
    if (layer.relu) g = nn::relu_backward(lt.normalized_out, g);
    const Matrix& gain = params.at(layer.gain()).value;
    Matrix g_pre = nn::batch_norm_backward(g, gain, lt.bn, grads[params.index_of(layer.gain())],
                                           grads[params.index_of(layer.shift())]);
    Matrix g_in;
    nn::linear_backward(lt.input, params.at(layer.weight()).value, g_pre, k == 0 ? nullptr : &g_in,
                        grads[params.index_of(layer.weight())], grads[params.index_of(layer.bias())]);
    if (k == point_layer_count_) {
      // Split the concat gradient back into local and pooled-global parts.
      const std::size_t half = g_in.cols() / 2;
      Matrix g_local(g_in.rows(), half);
      std::size_t row = 0;
      for (std::size_t s = 0; s < tape.segments.size(); ++s) {
        const std::size_t begin = row;
        Matrix g_global(1, half);
        for (std::size_t i = 0; i < tape.segments[s]; ++i, ++row) {
          for (std::size_t j = 0; j < half; ++j) {
            g_local(row, j) = g_in(row, j);
            g_global(0, j) += g_in(row, half + j);
          }
        }
        for (std::size_t j = 0; j < half; ++j) g_local(begin + tape.pool_argmax[s][j], j) += g_global(0, j);
      }
      g_in = std::move(g_local);
    }
    g = std::move(g_in);
  }
}

void Encoder::commit_running_stats(ParameterStore& params, const EncoderTape& tape) const {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const LayerSpec& layer = layers_[k];
    nn::update_running_stats(tape.layers[k].bn,
                             {params.at(layer.running_mean()).value, params.at(layer.running_var()).value},
                             config_.batch_norm);
  }
}

std::uint64_t Encoder::branch_signature(const EncoderTape& tape) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& layer : tape.layers) {
    for (double v : layer.normalized_out.values()) h = fold_signature(h, v > 0.0 ? 1 : 0);
  }
  for (const auto& cloud : tape.pool_argmax) {
    for (std::size_t a : cloud) h = fold_signature(h, a);
  }
  return h;
}

Matrix coordinates_matrix(const PointCloud& cloud) {
  Matrix m(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) m(i, a) = cloud.points[i][a];
  }
  return m;
}

EncodedCloud encode_points(const Encoder& encoder, const ParameterStore& params, const PointCloud& cloud,
                           nn::Mode mode) {
  validate(cloud);
  EncodedCloud out;
  for (const Vec3& p : cloud.points) {
    if (std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) > 1.0 + 1e-3) {
      out.unnormalized_input = true;
      break;
    }
  }
  out.features = encoder.forward(params, coordinates_matrix(cloud), mode, nullptr);
  if (!out.features.all_finite()) throw_numeric("encoder produced non-finite features");
  return out;
}

}  // namespace openad

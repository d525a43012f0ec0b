#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "openad/geometry.hpp"
#include "openad/matrix.hpp"
#include "openad/nn.hpp"
#include "openad/parameters.hpp"

namespace openad {

/// PointNet-style local + global point network.
///
///   coords (n x 3)
///     -> shared MLP over point_widths          (linear -> BN -> ReLU per layer)
///     -> max pool to a global feature          (width point_widths.back())
///     -> [local | global] per point            (width 2 * point_widths.back())
///     -> shared MLP over fuse_widths           (linear -> BN -> ReLU per layer;
///                                               fuse_widths[0] is the concat width)
///     -> shared linear to output_dim -> BN     (the per-point embedding)
struct EncoderConfig {
  std::vector<std::size_t> point_widths{3, 64, 128, 256};
  std::vector<std::size_t> fuse_widths{512, 512};
  std::size_t output_dim = 512;
  std::uint64_t seed = 0;
  nn::BatchNormOptions batch_norm{};

  std::size_t global_width() const { return point_widths.empty() ? 0 : point_widths.back(); }

  /// Throws Error(kUsage) on inconsistent widths.
  void validate() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Parameter names of one linear -> BN block.
struct LayerSpec {
  std::string prefix;
  std::size_t in = 0;
  std::size_t out = 0;
  bool relu = true;

  std::string weight() const { return prefix + ".weight"; }
  std::string bias() const { return prefix + ".bias"; }
  std::string gain() const { return prefix + ".bn.gain"; }
  std::string shift() const { return prefix + ".bn.shift"; }
  std::string running_mean() const { return prefix + ".bn.running_mean"; }
  std::string running_var() const { return prefix + ".bn.running_var"; }
};

/// Activations recorded by a forward pass for the backward pass.
struct EncoderTape {
  struct Layer {
    Matrix input;
    Matrix normalized_out;  // BN output; ReLU input for hidden layers
    nn::BatchNormCache bn;
  };
  std::vector<Layer> layers;
  std::vector<std::vector<std::size_t>> pool_argmax;  // per cloud, rows relative to the cloud
  std::vector<std::size_t> segments;                  // points per cloud
};

class Encoder {
 public:
  explicit Encoder(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  /// Adds the encoder's parameters to `store`, initialized from config.seed:
  /// weights U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), biases 0, BN gain 1,
  /// shift 0, running mean 0, running variance 1.
  void init_parameters(ParameterStore& store) const;

  /// n x 3 coordinates of one cloud to n x output_dim features. `tape` may be null.
  Matrix forward(const ParameterStore& params, const Matrix& coords, nn::Mode mode,
                 EncoderTape* tape) const;

  /// Several clouds stacked row-wise; `segments` gives each cloud's point
  /// count. Max pooling and the global feature are per cloud, while train-mode
  /// batch norm normalizes over every point of the batch.
  Matrix forward_batch(const ParameterStore& params, const Matrix& coords, const std::vector<std::size_t>& segments,
                       nn::Mode mode, EncoderTape* tape) const;

  /// Accumulates parameter gradients for `grad_features` into `grads`.
  void backward(const ParameterStore& params, const EncoderTape& tape, const Matrix& grad_features,
                GradientSet& grads) const;

  /// Folds the batch statistics of a train-mode tape into the running stats.
  void commit_running_stats(ParameterStore& params, const EncoderTape& tape) const;

  /// Fingerprint of the ReLU gates and max-pool winners.
  static std::uint64_t branch_signature(const EncoderTape& tape);

 private:
  EncoderConfig config_;
  std::vector<LayerSpec> layers_;
  std::size_t point_layer_count_ = 0;
};

Matrix coordinates_matrix(const PointCloud& cloud);

struct EncodedCloud {
  Matrix features;
  bool unnormalized_input = false;  // max norm exceeded 1 + 1e-3
};

/// Convenience wrapper over Encoder::forward without a tape. Throws
/// Error(kNumeric) "encoder produced non-finite features" when needed.
EncodedCloud encode_points(const Encoder& encoder, const ParameterStore& params,
                           const PointCloud& cloud, nn::Mode mode);

}  // namespace openad

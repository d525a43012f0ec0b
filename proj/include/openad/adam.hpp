#pragma once

#include <cstdint>
#include <vector>

#include "openad/matrix.hpp"
#include "openad/parameters.hpp"

namespace openad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;
  // false: L2 term g += decay * theta before the moments (classic Adam).
  // true: theta -= lr * decay * theta after the update (AdamW).
  bool decoupled_weight_decay = false;
};

/// Adam with bias correction over every trainable parameter of a store.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update using the gradients in `params`, then zeroes them.
  /// Throws Error(kNumeric) naming the parameter if any gradient is not
  /// finite; nothing is modified in that case.
  void step(ParameterStore& params);

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Matrix>& first_moments() const { return first_; }
  const std::vector<Matrix>& second_moments() const { return second_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::uint64_t step_ = 0;
};

}  // namespace openad

#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "openad/matrix.hpp"

namespace openad {

/// One named parameter array. Trainable entries carry a gradient of the
/// same shape; running statistics do not.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // empty when !trainable
  bool trainable = true;
};

/// Gradient buffers laid out parallel to a ParameterStore, so several
/// workers can accumulate independently and be reduced in a fixed order.
using GradientSet = std::vector<Matrix>;

class ParameterStore {
 public:
  /// Returns the index of the new parameter. Names must be unique.
  std::size_t add(std::string name, Matrix value, bool trainable);

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return params_.at(i); }
  const Parameter& at(std::size_t i) const { return params_.at(i); }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }
  std::size_t index_of(const std::string& name) const;

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }

  /// Total scalar count over every parameter, trainable or not.
  std::size_t scalar_count() const;
  std::size_t trainable_scalar_count() const;

  void zero_grad();

  /// Zeroed buffers shaped like the trainable gradients (empty otherwise).
  GradientSet make_gradient_set() const;

  /// grad += set, parameter by parameter in store order.
  void accumulate(const GradientSet& set);

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    return a.params_.size() == b.params_.size() && [&] {
      for (std::size_t i = 0; i < a.params_.size(); ++i) {
        const auto& x = a.params_[i];
        const auto& y = b.params_[i];
        if (x.name != y.name || x.trainable != y.trainable || !(x.value == y.value)) return false;
      }
      return true;
    }();
  }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace openad

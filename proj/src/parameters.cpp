#include "openad/parameters.hpp"

#include "openad/error.hpp"

namespace openad {

std::size_t ParameterStore::add(std::string name, Matrix value, bool trainable) {
  if (index_.contains(name)) throw_usage("duplicate parameter name '" + name + "'");
  Parameter p;
  p.name = name;
  p.trainable = trainable;
  if (trainable) p.grad = Matrix(value.rows(), value.cols());
  p.value = std::move(value);
  params_.push_back(std::move(p));
  index_.emplace(std::move(name), params_.size() - 1);
  return params_.size() - 1;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw_usage("unknown parameter '" + name + "'");
  return it->second;
}

Parameter& ParameterStore::at(const std::string& name) { return params_[index_of(name)]; }
const Parameter& ParameterStore::at(const std::string& name) const {
  return params_[index_of(name)];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

std::size_t ParameterStore::trainable_scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) {
    if (p.trainable) total += p.value.size();
  }
  return total;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) {
    if (p.trainable) p.grad.fill(0.0);
  }
}

GradientSet ParameterStore::make_gradient_set() const {
  GradientSet set;
  set.reserve(params_.size());
  for (const auto& p : params_) {
    set.push_back(p.trainable ? Matrix(p.value.rows(), p.value.cols()) : Matrix());
  }
  return set;
}

void ParameterStore::accumulate(const GradientSet& set) {
  if (set.size() != params_.size()) throw_usage("gradient set does not match parameter store");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].trainable) add_into(params_[i].grad, set[i]);
  }
}

}  // namespace openad

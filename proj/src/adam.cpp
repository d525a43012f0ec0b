#include "openad/adam.hpp"

#include <cmath>

#include "openad/error.hpp"

namespace openad {

void Adam::step(ParameterStore& params) {
  auto& all = params.all();
  for (const auto& p : all) {
    if (p.trainable && !p.grad.all_finite()) throw_numeric("non-finite gradient in parameter '" + p.name + "'");
  }
  if (first_.empty()) {
    for (const auto& p : all) {
      first_.emplace_back(p.value.rows(), p.trainable ? p.value.cols() : 0);
      second_.emplace_back(p.value.rows(), p.trainable ? p.value.cols() : 0);
    }
  } else if (first_.size() != all.size()) {
    throw_usage("Adam state does not match the parameter store");
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  const double lr = config_.learning_rate;
  const double decay = config_.weight_decay;

  for (std::size_t k = 0; k < all.size(); ++k) {
    Parameter& p = all[k];
    if (!p.trainable) continue;
    auto& theta = p.value.values();
    auto& grad = p.grad.values();
    auto& m = first_[k].values();
    auto& v = second_[k].values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double g = grad[i];
      if (!config_.decoupled_weight_decay) g += decay * theta[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      if (config_.decoupled_weight_decay) theta[i] -= lr * decay * theta[i];
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    p.grad.fill(0.0);
  }
}

}  // namespace openad

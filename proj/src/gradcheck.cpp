#include "openad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace openad {

double GradCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, b.max_relative_error);
  return worst;
}

std::size_t GradCheckReport::skipped() const {
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.skipped;
  return total;
}

GradCheckReport finite_difference_check(ParameterStore& params, const LossProbe& loss,
                                        const GradCheckOptions& options) {
  const Probe base = loss();
  const double floor = options.loss_floor * std::max(1.0, std::abs(base.value));
  const double h = options.step;

  GradCheckReport report;
  for (auto& p : params.all()) {
    if (!p.trainable) continue;
    auto& theta = p.value.values();
    const auto& analytic = p.grad.values();
    std::vector<double> numeric(theta.size(), 0.0);
    std::vector<char> kink(theta.size(), 0);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const Probe plus = loss();
      theta[i] = saved - h;
      const Probe minus = loss();
      theta[i] = saved;
      numeric[i] = (plus.value - minus.value) / (2.0 * h);
      kink[i] = plus.signature != base.signature || minus.signature != base.signature;
    }

    BlockError block;
    block.name = p.name;
    double block_max = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (!kink[i]) block_max = std::max(block_max, std::abs(numeric[i]));
    }
    const double denom_floor = std::max(options.block_floor * block_max, floor);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (kink[i]) {
        ++block.skipped;
        continue;
      }
      ++block.checked;
      const double err = std::abs(analytic[i] - numeric[i]) / std::max(std::abs(numeric[i]), denom_floor);
      block.max_relative_error = std::max(block.max_relative_error, err);
    }
    report.blocks.push_back(block);
  }
  return report;
}

}  // namespace openad

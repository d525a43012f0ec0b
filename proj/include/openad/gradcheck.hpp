#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "openad/parameters.hpp"

namespace openad {

/// One evaluation of a scalar objective. `signature` fingerprints the
/// piecewise-linear branch taken (ReLU gates, max-pool winners); entries
/// whose +h and -h evaluations land on different branches straddle a kink
/// and are skipped.
struct Probe {
  double value = 0.0;
  std::uint64_t signature = 0;
};

using LossProbe = std::function<Probe()>;

struct BlockError {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // kink-straddling entries
};

struct GradCheckReport {
  std::vector<BlockError> blocks;
  double max_relative_error() const;
  std::size_t skipped() const;
};

struct GradCheckOptions {
  double step = 1e-5;
  // Entries with tiny reference gradients are compared against this share
  // of the block's largest reference gradient instead of their own size.
  double block_floor = 1e-2;
  // Absolute floor, as a multiple of max(1, |loss|). Covers blocks whose
  // true gradient is identically zero.
  double loss_floor = 1e-6;
};

/// Compares the analytic gradients already stored in `params` (grad slots)
/// against central differences of `loss`. The relative error of an entry is
///   |analytic - numeric| / max(|numeric|, block_floor * max|numeric|, floor).
/// Parameter values are restored bit-exactly afterwards.
GradCheckReport finite_difference_check(ParameterStore& params, const LossProbe& loss,
                                        const GradCheckOptions& options = {});

/// FNV-1a style fold, for building Probe signatures.
inline std::uint64_t fold_signature(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h * 0x100000001b3ULL;
}

}  // namespace openad

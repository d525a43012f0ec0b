#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "openad/matrix.hpp"

namespace openad {

/// Frozen text embeddings of the affordance labels, one row per label.
struct EmbeddingTable {
  std::vector<std::string> labels;
  Matrix vectors;  // m x D
  std::string source;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return vectors.cols(); }

  /// Throws Error(kData) unless m >= 1, labels are unique and non-empty,
  /// rows are finite with norm > 1e-8.
  void validate() const;

  std::optional<std::size_t> find(const std::string& label) const;

  /// Rows for `wanted`, in that order. Throws Error(kData) on a missing label.
  EmbeddingTable select(const std::vector<std::string>& wanted) const;
};

enum class TemperatureMode {
  kLogScale,  // value = rho, logits = exp(rho) * F
  kLiteral,   // value = tau, logits = F / tau
};

/// Softmax sharpness. Both modes start from value ln(1 / 0.07); in log-scale
/// mode that gives a multiplier of 1 / 0.07, in literal mode tau ~= 2.659.
struct LogitScale {
  double value = std::log(1.0 / 0.07);
  TemperatureMode mode = TemperatureMode::kLogScale;

  /// Multiplier applied to the correlations.
  double scale() const { return mode == TemperatureMode::kLogScale ? std::exp(value) : 1.0 / value; }
  /// d scale / d value.
  double scale_derivative() const {
    return mode == TemperatureMode::kLogScale ? std::exp(value) : -1.0 / (value * value);
  }
};

inline constexpr double kInitialLogitScale = 2.659260036932778;  // ln(1 / 0.07)

struct CorrelationCache {
  std::vector<double> point_norms;  // |P_i|
  Matrix unit_text;                 // T_j / |T_j|, m x D
};

/// Cosine similarity of every point feature with every label embedding:
/// F[i][j] = <P_i, T_j> / (|P_i| |T_j|). Throws on a degenerate feature row
/// (|P_i| < 1e-8) or a dimension mismatch.
Matrix correlate(const Matrix& features, const EmbeddingTable& table, CorrelationCache* cache = nullptr);

/// Gradient of a scalar with respect to the features, given its gradient
/// with respect to F.
Matrix correlate_backward(const Matrix& features, const Matrix& correlation, const CorrelationCache& cache,
                          const Matrix& grad_correlation);

/// Row-wise softmax of scale * F, with per-point argmax (lowest index on ties).
struct AffordanceMap {
  Matrix scores;      // n x m, rows sum to 1
  Matrix log_scores;  // n x m
  std::vector<std::size_t> assignment;
  std::vector<std::string> labels;

  double max_score(std::size_t point) const;
};

AffordanceMap scaled_softmax(const Matrix& correlation, const LogitScale& scale,
                             std::vector<std::string> labels = {});

/// Row-wise argmax with lowest-index tie breaking.
std::vector<std::size_t> argmax_rows(const Matrix& values);

/// Cube-root inverse-frequency weights: w_j = (max_k c_k / c_j)^(1/3).
struct ClassWeights {
  std::vector<double> weights;
  std::vector<std::uint64_t> counts;
};

/// Throws Error(kData) if any count is zero.
ClassWeights class_weights(std::span<const std::uint64_t> counts);

/// L = -sum_i w[y_i] * log_scores[i][y_i]. When `grad_log_scores` is
/// non-null it receives dL/dlog_scores. Throws Error(kNumeric) naming the
/// first point whose term is not finite.
double weighted_nll(const Matrix& log_scores, std::span<const std::uint32_t> labels,
                    const ClassWeights& weights, Matrix* grad_log_scores = nullptr);

/// Loss of one cloud through correlation, scaled softmax and weighted NLL,
/// with gradients for the features and the scale parameter.
struct HeadLoss {
  double loss = 0.0;
  Matrix grad_features;
  double grad_scale_value = 0.0;
  AffordanceMap map;
};

HeadLoss head_loss(const Matrix& features, const EmbeddingTable& table, const LogitScale& scale,
                   std::span<const std::uint32_t> labels, const ClassWeights& weights);

}  // namespace openad

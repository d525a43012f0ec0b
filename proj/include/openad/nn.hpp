#pragma once

#include <cstddef>
#include <vector>

#include "openad/matrix.hpp"

// Fixed-order kernels over per-point feature matrices (rows = points).
// Backward functions accumulate parameter gradients with `+=` so several
// clouds can share one gradient buffer; input gradients are overwritten.

namespace openad::nn {

enum class Mode { kTrain, kEval };

// ---- shared linear layer: out[i] = in[i] * W + b, W is d_in x d_out ----

Matrix linear_forward(const Matrix& input, const Matrix& weight, const Matrix& bias);

/// `grad_input` may be null when the input gradient is not needed.
void linear_backward(const Matrix& input, const Matrix& weight, const Matrix& grad_output,
                     Matrix* grad_input, Matrix& grad_weight, Matrix& grad_bias);

// ---- ReLU ----

Matrix relu_forward(const Matrix& input);
Matrix relu_backward(const Matrix& input, const Matrix& grad_output);

// ---- batch norm over the rows of a batch ----

struct BatchNormOptions {
  double momentum = 0.1;
  double epsilon = 1e-5;
  friend bool operator==(const BatchNormOptions&, const BatchNormOptions&) = default;
};

struct BatchNormRunning {
  Matrix& mean;      // 1 x d
  Matrix& variance;  // 1 x d
};

/// Everything backward needs, plus the batch statistics so the caller can
/// fold them into the running estimates in a fixed order.
struct BatchNormCache {
  Mode mode = Mode::kTrain;
  Matrix normalized;               // n x d, x_hat
  std::vector<double> inv_std;     // d
  std::vector<double> batch_mean;  // d (train mode)
  std::vector<double> batch_var;   // d, biased (train mode)
  std::size_t count = 0;           // n
};

/// Train mode normalizes by the batch statistics and leaves running stats
/// untouched (see update_running_stats); eval mode uses the running stats.
Matrix batch_norm_forward(const Matrix& input, const Matrix& gain, const Matrix& shift, Mode mode,
                          const Matrix& running_mean, const Matrix& running_var,
                          const BatchNormOptions& options, BatchNormCache& cache);

/// running = (1 - momentum) * running + momentum * batch, with the unbiased
/// batch variance.
void update_running_stats(const BatchNormCache& cache, BatchNormRunning running,
                          const BatchNormOptions& options);

/// Forward plus, in train mode, the running-stat update.
Matrix batch_norm_points(const Matrix& input, const Matrix& gain, const Matrix& shift, Mode mode,
                         BatchNormRunning running, const BatchNormOptions& options,
                         BatchNormCache& cache);

Matrix batch_norm_backward(const Matrix& grad_output, const Matrix& gain, const BatchNormCache& cache,
                           Matrix& grad_gain, Matrix& grad_shift);

// ---- max pooling over points ----

/// Returns a 1 x d row; `argmax[j]` receives the winning row for column j
/// (lowest row on ties).
Matrix max_pool_forward(const Matrix& input, std::vector<std::size_t>& argmax);
Matrix max_pool_backward(const Matrix& grad_output, const std::vector<std::size_t>& argmax,
                         std::size_t rows);

// ---- row-wise log-softmax ----

Matrix log_softmax_rows(const Matrix& input);

/// `output` is the forward result.
Matrix log_softmax_rows_backward(const Matrix& output, const Matrix& grad_output);

}  // namespace openad::nn

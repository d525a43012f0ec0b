#include "openad/nn.hpp"

#include <cmath>

#include "openad/error.hpp"

namespace openad::nn {

namespace {

void require(bool ok, const std::string& what, const Matrix& a, const Matrix& b) {
  if (!ok) throw_usage(what + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

}  // namespace

Matrix linear_forward(const Matrix& input, const Matrix& weight, const Matrix& bias) {
  require(input.cols() == weight.rows(), "linear input/weight", input, weight);
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "linear weight/bias", weight, bias);
  const std::size_t n = input.rows();
  const std::size_t d_in = weight.rows();
  const std::size_t d_out = weight.cols();
  Matrix out(n, d_out);
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    const double* x = input.row(i).data();
    for (std::size_t k = 0; k < d_in; ++k) {
      const double xk = x[k];
      const double* w = weight.row(k).data();
      for (std::size_t j = 0; j < d_out; ++j) o[j] += xk * w[j];
    }
    const double* b = bias.row(0).data();
    for (std::size_t j = 0; j < d_out; ++j) o[j] += b[j];
  }
  return out;
}

void linear_backward(const Matrix& input, const Matrix& weight, const Matrix& grad_output,
                     Matrix* grad_input, Matrix& grad_weight, Matrix& grad_bias) {
  require(grad_output.rows() == input.rows() && grad_output.cols() == weight.cols(),
          "linear grad_output", grad_output, weight);
  require(grad_weight.rows() == weight.rows() && grad_weight.cols() == weight.cols(),
          "linear grad_weight", grad_weight, weight);
  require(grad_bias.rows() == 1 && grad_bias.cols() == weight.cols(), "linear grad_bias", grad_bias,
          weight);
  const std::size_t n = input.rows();
  const std::size_t d_in = weight.rows();
  const std::size_t d_out = weight.cols();

  if (grad_input != nullptr) {
    *grad_input = Matrix(n, d_in);
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = grad_output.row(i).data();
      double* gi = grad_input->row(i).data();
      for (std::size_t k = 0; k < d_in; ++k) {
        const double* w = weight.row(k).data();
        double acc = 0.0;
        for (std::size_t j = 0; j < d_out; ++j) acc += g[j] * w[j];
        gi[k] = acc;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* g = grad_output.row(i).data();
    const double* x = input.row(i).data();
    for (std::size_t k = 0; k < d_in; ++k) {
      const double xk = x[k];
      double* gw = grad_weight.row(k).data();
      for (std::size_t j = 0; j < d_out; ++j) gw[j] += xk * g[j];
    }
    double* gb = grad_bias.row(0).data();
    for (std::size_t j = 0; j < d_out; ++j) gb[j] += g[j];
  }
}

Matrix relu_forward(const Matrix& input) {
  Matrix out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix relu_backward(const Matrix& input, const Matrix& grad_output) {
  require(input.rows() == grad_output.rows() && input.cols() == grad_output.cols(), "relu backward",
          input, grad_output);
  Matrix out = grad_output;
  const auto& x = input.values();
  auto& g = out.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > 0.0)) g[i] = 0.0;
  }
  return out;
}

Matrix batch_norm_forward(const Matrix& input, const Matrix& gain, const Matrix& shift, Mode mode,
                          const Matrix& running_mean, const Matrix& running_var,
                          const BatchNormOptions& options, BatchNormCache& cache) {
  const std::size_t n = input.rows();
  const std::size_t d = input.cols();
  require(gain.rows() == 1 && gain.cols() == d, "batch norm gain", input, gain);
  require(shift.rows() == 1 && shift.cols() == d, "batch norm shift", input, shift);
  cache.mode = mode;
  cache.count = n;
  cache.inv_std.assign(d, 0.0);
  std::vector<double> center(d, 0.0);

  if (mode == Mode::kTrain) {
    if (n < 2) throw_usage("batch norm requires >= 2 points in train mode");
    cache.batch_mean.assign(d, 0.0);
    cache.batch_var.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = input.row(i).data();
      for (std::size_t j = 0; j < d; ++j) cache.batch_mean[j] += x[j];
    }
    for (double& m : cache.batch_mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = input.row(i).data();
      for (std::size_t j = 0; j < d; ++j) {
        const double c = x[j] - cache.batch_mean[j];
        cache.batch_var[j] += c * c;
      }
    }
    for (double& v : cache.batch_var) v /= static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
      center[j] = cache.batch_mean[j];
      cache.inv_std[j] = 1.0 / std::sqrt(cache.batch_var[j] + options.epsilon);
    }
  } else {
    require(running_mean.cols() == d && running_var.cols() == d, "batch norm running stats", input,
            running_mean);
    cache.batch_mean.clear();
    cache.batch_var.clear();
    for (std::size_t j = 0; j < d; ++j) {
      center[j] = running_mean(0, j);
      cache.inv_std[j] = 1.0 / std::sqrt(running_var(0, j) + options.epsilon);
    }
  }

  cache.normalized = Matrix(n, d);
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = input.row(i).data();
    double* xh = cache.normalized.row(i).data();
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < d; ++j) {
      xh[j] = (x[j] - center[j]) * cache.inv_std[j];
      o[j] = gain(0, j) * xh[j] + shift(0, j);
    }
  }
  return out;
}

void update_running_stats(const BatchNormCache& cache, BatchNormRunning running,
                          const BatchNormOptions& options) {
  if (cache.mode != Mode::kTrain) return;
  const std::size_t d = cache.batch_mean.size();
  const double unbias = static_cast<double>(cache.count) / static_cast<double>(cache.count - 1);
  const double m = options.momentum;
  for (std::size_t j = 0; j < d; ++j) {
    running.mean(0, j) = (1.0 - m) * running.mean(0, j) + m * cache.batch_mean[j];
    running.variance(0, j) = (1.0 - m) * running.variance(0, j) + m * cache.batch_var[j] * unbias;
  }
}

Matrix batch_norm_points(const Matrix& input, const Matrix& gain, const Matrix& shift, Mode mode,
                         BatchNormRunning running, const BatchNormOptions& options,
                         BatchNormCache& cache) {
  Matrix out =
      batch_norm_forward(input, gain, shift, mode, running.mean, running.variance, options, cache);
  update_running_stats(cache, running, options);
  return out;
}

Matrix batch_norm_backward(const Matrix& grad_output, const Matrix& gain, const BatchNormCache& cache,
                           Matrix& grad_gain, Matrix& grad_shift) {
  const std::size_t n = grad_output.rows();
  const std::size_t d = grad_output.cols();
  require(cache.normalized.rows() == n && cache.normalized.cols() == d, "batch norm backward",
          grad_output, cache.normalized);
  std::vector<double> sum_g(d, 0.0);
  std::vector<double> sum_g_xhat(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* g = grad_output.row(i).data();
    const double* xh = cache.normalized.row(i).data();
    for (std::size_t j = 0; j < d; ++j) {
      sum_g[j] += g[j];
      sum_g_xhat[j] += g[j] * xh[j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    grad_gain(0, j) += sum_g_xhat[j];
    grad_shift(0, j) += sum_g[j];
  }

  Matrix grad_input(n, d);
  if (cache.mode == Mode::kEval) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        grad_input(i, j) = grad_output(i, j) * gain(0, j) * cache.inv_std[j];
      }
    }
    return grad_input;
  }
  // dx = inv_std / n * (n * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)), dxhat = g * gain
  const double count = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* g = grad_output.row(i).data();
    const double* xh = cache.normalized.row(i).data();
    double* gi = grad_input.row(i).data();
    for (std::size_t j = 0; j < d; ++j) {
      const double gamma = gain(0, j);
      gi[j] = gamma * cache.inv_std[j] / count *
              (count * g[j] - sum_g[j] - xh[j] * sum_g_xhat[j]);
    }
  }
  return grad_input;
}

Matrix max_pool_forward(const Matrix& input, std::vector<std::size_t>& argmax) {
  const std::size_t n = input.rows();
  const std::size_t d = input.cols();
  if (n == 0) throw_usage("max pool over zero points");
  Matrix out(1, d);
  argmax.assign(d, 0);
  for (std::size_t j = 0; j < d; ++j) out(0, j) = input(0, j);
  for (std::size_t i = 1; i < n; ++i) {
    const double* x = input.row(i).data();
    for (std::size_t j = 0; j < d; ++j) {
      if (x[j] > out(0, j)) {
        out(0, j) = x[j];
        argmax[j] = i;
      }
    }
  }
  return out;
}

Matrix max_pool_backward(const Matrix& grad_output, const std::vector<std::size_t>& argmax,
                         std::size_t rows) {
  const std::size_t d = grad_output.cols();
  if (grad_output.rows() != 1 || argmax.size() != d) {
    throw_usage("max pool backward: shape mismatch " + grad_output.shape_string());
  }
  Matrix grad_input(rows, d);
  for (std::size_t j = 0; j < d; ++j) grad_input(argmax[j], j) += grad_output(0, j);
  return grad_input;
}

Matrix log_softmax_rows(const Matrix& input) {
  Matrix out(input.rows(), input.cols());
  for (std::size_t i = 0; i < input.rows(); ++i) {
    const auto x = input.row(i);
    if (x.empty()) continue;
    double max = x[0];
    for (double v : x) max = std::max(max, v);
    double sum = 0.0;
    for (double v : x) sum += std::exp(v - max);
    const double lse = max + std::log(sum);
    auto o = out.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) o[j] = x[j] - lse;
  }
  return out;
}

Matrix log_softmax_rows_backward(const Matrix& output, const Matrix& grad_output) {
  require(output.rows() == grad_output.rows() && output.cols() == grad_output.cols(),
          "log-softmax backward", output, grad_output);
  Matrix grad_input(output.rows(), output.cols());
  for (std::size_t i = 0; i < output.rows(); ++i) {
    const auto y = output.row(i);
    const auto g = grad_output.row(i);
    double sum_g = 0.0;
    for (double v : g) sum_g += v;
    auto gi = grad_input.row(i);
    for (std::size_t j = 0; j < y.size(); ++j) gi[j] = g[j] - std::exp(y[j]) * sum_g;
  }
  return grad_input;
}

}  // namespace openad::nn

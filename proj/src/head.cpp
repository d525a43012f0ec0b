#include "openad/head.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "openad/error.hpp"
#include "openad/nn.hpp"

namespace openad {

namespace {
constexpr double kMinNorm = 1e-8;

double row_norm(std::span<const double> row) {
  double sq = 0.0;
  for (double v : row) sq += v * v;
  return std::sqrt(sq);
}
}  // namespace

void EmbeddingTable::validate() const {
  if (labels.empty()) throw_data("embedding table has no labels");
  if (vectors.rows() != labels.size()) {
    throw_data("embedding table has " + std::to_string(labels.size()) + " labels but " +
               std::to_string(vectors.rows()) + " vectors");
  }
  if (vectors.cols() == 0) throw_data("embedding dimension must be positive");
  std::unordered_set<std::string> seen;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j].empty()) throw_data("empty label at row " + std::to_string(j));
    if (!seen.insert(labels[j]).second) throw_data("duplicate label '" + labels[j] + "'");
    const auto row = vectors.row(j);
    for (double v : row) {
      if (!std::isfinite(v)) throw_data("non-finite embedding for label '" + labels[j] + "'");
    }
    if (row_norm(row) <= kMinNorm) throw_data("zero-norm embedding for label '" + labels[j] + "'");
  }
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

EmbeddingTable EmbeddingTable::select(const std::vector<std::string>& wanted) const {
  EmbeddingTable out;
  out.source = source;
  out.vectors = Matrix(wanted.size(), dim());
  for (std::size_t r = 0; r < wanted.size(); ++r) {
    const auto j = find(wanted[r]);
    if (!j) throw_data("label '" + wanted[r] + "' not found in embedding table");
    out.labels.push_back(wanted[r]);
    std::copy(vectors.row(*j).begin(), vectors.row(*j).end(), out.vectors.row(r).begin());
  }
  return out;
}

Matrix correlate(const Matrix& features, const EmbeddingTable& table, CorrelationCache* cache) {
  if (features.cols() != table.dim()) {
    throw_usage("feature dimension " + std::to_string(features.cols()) + " does not match embedding dimension " +
                std::to_string(table.dim()));
  }
  const std::size_t n = features.rows();
  const std::size_t m = table.size();
  const std::size_t d = table.dim();

  CorrelationCache local;
  CorrelationCache& c = cache != nullptr ? *cache : local;
  c.unit_text = Matrix(m, d);
  for (std::size_t j = 0; j < m; ++j) {
    const double norm = row_norm(table.vectors.row(j));
    if (norm <= kMinNorm) throw_data("zero-norm embedding for label '" + table.labels[j] + "'");
    for (std::size_t k = 0; k < d; ++k) c.unit_text(j, k) = table.vectors(j, k) / norm;
  }
  c.point_norms.assign(n, 0.0);
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = features.row(i);
    const double norm = row_norm(p);
    if (!(norm >= kMinNorm)) throw_numeric("degenerate point feature at point " + std::to_string(i));
    c.point_norms[i] = norm;
    for (std::size_t j = 0; j < m; ++j) {
      const auto t = c.unit_text.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += p[k] * t[k];
      out(i, j) = dot / norm;
    }
  }
  return out;
}

Matrix correlate_backward(const Matrix& features, const Matrix& correlation, const CorrelationCache& cache,
                          const Matrix& grad_correlation) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  const std::size_t m = correlation.cols();
  Matrix grad(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = cache.point_norms[i];
    double radial = 0.0;
    auto g = grad.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double gf = grad_correlation(i, j);
      radial += gf * correlation(i, j);
      const auto t = cache.unit_text.row(j);
      for (std::size_t k = 0; k < d; ++k) g[k] += gf * t[k];
    }
    const auto p = features.row(i);
    for (std::size_t k = 0; k < d; ++k) g[k] = g[k] / norm - radial * p[k] / (norm * norm);
  }
  return grad;
}

double AffordanceMap::max_score(std::size_t point) const { return scores(point, assignment.at(point)); }

std::vector<std::size_t> argmax_rows(const Matrix& values) {
  std::vector<std::size_t> out(values.rows(), 0);
  for (std::size_t i = 0; i < values.rows(); ++i) {
    const auto r = values.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

AffordanceMap scaled_softmax(const Matrix& correlation, const LogitScale& scale, std::vector<std::string> labels) {
  const double s = scale.scale();
  if (!std::isfinite(s)) throw_numeric("logit scale is not finite");
  Matrix logits = correlation;
  for (double& v : logits.values()) v *= s;
  AffordanceMap map;
  map.log_scores = nn::log_softmax_rows(logits);
  map.scores = map.log_scores;
  for (double& v : map.scores.values()) v = std::exp(v);
  // Argmax on the logits, so exact ties in F stay ties.
  map.assignment = argmax_rows(logits);
  map.labels = std::move(labels);
  return map;
}

ClassWeights class_weights(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw_usage("class weights need at least one class");
  ClassWeights out;
  out.counts.assign(counts.begin(), counts.end());
  std::uint64_t max_count = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) {
      throw_data("class " + std::to_string(j) +
                 " absent from training set; zero-shot classes must be excluded from the training label set");
    }
    max_count = std::max(max_count, counts[j]);
  }
  for (std::uint64_t c : counts) {
    // glibc's double cbrt is not correctly rounded (cbrt(27) != 3); the long
    // double evaluation rounds exact cubes to exact integers.
    const long double ratio = static_cast<long double>(max_count) / static_cast<long double>(c);
    out.weights.push_back(static_cast<double>(std::cbrt(ratio)));
  }
  return out;
}

double weighted_nll(const Matrix& log_scores, std::span<const std::uint32_t> labels, const ClassWeights& weights,
                    Matrix* grad_log_scores) {
  const std::size_t n = log_scores.rows();
  const std::size_t m = log_scores.cols();
  if (labels.size() != n) throw_usage("label count does not match point count");
  if (weights.weights.size() != m) throw_usage("class weight count does not match label count");
  if (grad_log_scores != nullptr) *grad_log_scores = Matrix(n, m);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t y = labels[i];
    if (y >= m) throw_usage("label " + std::to_string(y) + " at point " + std::to_string(i) + " out of range");
    const double w = weights.weights[y];
    const double term = -w * log_scores(i, y);
    if (!std::isfinite(term)) throw_numeric("non-finite loss at point " + std::to_string(i));
    loss += term;
    if (grad_log_scores != nullptr) (*grad_log_scores)(i, y) = -w;
  }
  return loss;
}

HeadLoss head_loss(const Matrix& features, const EmbeddingTable& table, const LogitScale& scale,
                   std::span<const std::uint32_t> labels, const ClassWeights& weights) {
  HeadLoss out;
  CorrelationCache cache;
  const Matrix correlation = correlate(features, table, &cache);
  out.map = scaled_softmax(correlation, scale, table.labels);
  Matrix grad_log_scores;
  out.loss = weighted_nll(out.map.log_scores, labels, weights, &grad_log_scores);

  const Matrix grad_logits = nn::log_softmax_rows_backward(out.map.log_scores, grad_log_scores);
  const double s = scale.scale();
  Matrix grad_correlation = grad_logits;
  double dot = 0.0;
  for (std::size_t k = 0; k < grad_logits.size(); ++k) {
    dot += grad_logits.values()[k] * correlation.values()[k];
    grad_correlation.values()[k] *= s;
  }
  out.grad_scale_value = dot * scale.scale_derivative();
  out.grad_features = correlate_backward(features, correlation, cache, grad_correlation);
  return out;
}

}  // namespace openad

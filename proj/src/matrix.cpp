#include "openad/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "openad/error.hpp"

namespace openad {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw_usage("matrix data length " + std::to_string(data_.size()) + " does not match shape " +
                openad::shape_string(rows, cols));
  }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const { return openad::shape_string(rows_, cols_); }

std::string shape_string(std::size_t rows, std::size_t cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

void add_into(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw_usage("cannot add " + b.shape_string() + " into " + a.shape_string());
  }
  auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

}  // namespace openad

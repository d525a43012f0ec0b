#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace openad {

/// Dense row-major matrix of doubles. Row i of a feature matrix holds the
/// features of point i.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a += b, elementwise; shapes must agree.
void add_into(Matrix& a, const Matrix& b);

std::string shape_string(std::size_t rows, std::size_t cols);

}  // namespace openad

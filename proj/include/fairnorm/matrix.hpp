#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fairnorm {

/// Dense row-major matrix of doubles. Feature matrices are stored F x N
/// (one row per feature, one column per node).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double v) noexcept;
  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);

/// a += alpha * b
void add_scaled(Matrix& a, double alpha, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double vec_norm2(std::span<const double> v);

}  // namespace fairnorm

#include "fairnorm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairnorm/error.hpp"
#include "fairnorm/simd/kernels.hpp"

namespace fairnorm {
namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a) + " * " + dims(b));
  const auto& k = simd::active();
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = c.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double s = a(i, p);
      if (s != 0.0) k.axpy(b.cols(), s, b.row(p).data(), out);
    }
  }
  return c;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_at: " + dims(a) + "^T * " + dims(b));
  const auto& k = simd::active();
  Matrix c(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const double* brow = b.row(p).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = a(p, i);
      if (s != 0.0) k.axpy(b.cols(), s, brow, c.row(i).data());
    }
  }
  return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_bt: " + dims(a) + " * " + dims(b) + "^T");
  const auto& k = simd::active();
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      c(i, j) = k.dot(a.cols(), a.row(i).data(), b.row(j).data());
  return c;
}

void add_scaled(Matrix& a, double alpha, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("add_scaled: " + dims(a) + " vs " + dims(b));
  simd::active().axpy(a.size(), alpha, b.data(), a.data());
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: " + dims(a) + " vs " + dims(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) { return vec_norm2(a.values()); }

double vec_norm2(std::span<const double> v) {
  return std::sqrt(simd::active().dot(v.size(), v.data(), v.data()));
}

}  // namespace fairnorm

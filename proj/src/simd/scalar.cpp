#include "fairnorm/simd/kernels.hpp"

namespace fairnorm::simd {
namespace {

double dot_scalar(std::size_t n, const double* a, const double* b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double gather_dot_scalar(std::size_t nnz, const double* vals, const std::int32_t* idx,
                         const double* x) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < nnz; ++k) s += vals[k] * x[idx[k]];
  return s;
}

void scal_scalar(std::size_t n, double alpha, double* x) noexcept {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{Isa::scalar, dot_scalar, axpy_scalar, gather_dot_scalar,
                                 scal_scalar};
  return table;
}

}  // namespace fairnorm::simd

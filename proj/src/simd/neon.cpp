// AArch64 always has Advanced SIMD, so no runtime probe is needed here.
#include <arm_neon.h>

#include "fairnorm/simd/kernels.hpp"

namespace fairnorm::simd {
namespace {

double dot_neon(std::size_t n, const double* a, const double* b) noexcept {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(std::size_t n, double alpha, const double* x, double* y) noexcept {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double gather_dot_neon(std::size_t nnz, const double* vals, const std::int32_t* idx,
                       const double* x) noexcept {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= nnz; k += 2) {
    const double pair[2] = {x[idx[k]], x[idx[k + 1]]};
    acc = vfmaq_f64(acc, vld1q_f64(vals + k), vld1q_f64(pair));
  }
  double s = vaddvq_f64(acc);
  for (; k < nnz; ++k) s += vals[k] * x[idx[k]];
  return s;
}

void scal_neon(std::size_t n, double alpha, double* x) noexcept {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), alpha));
  for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const KernelTable& neon_kernels() noexcept {
  static const KernelTable table{Isa::neon, dot_neon, axpy_neon, gather_dot_neon, scal_neon};
  return table;
}

}  // namespace fairnorm::simd

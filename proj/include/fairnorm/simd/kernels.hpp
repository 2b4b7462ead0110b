#pragma once

// Double-precision inner-loop kernels with a scalar reference implementation
// and vectorized variants chosen once at startup.
//
// Every variant computes the same mathematical result; vector variants may
// reorder additions, so results agree with the scalar path to rounding (the
// kernel equivalence tests pin the tolerance). Within one process the
// selected table never changes, so repeated runs are bit-identical.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fairnorm::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(std::size_t n, const double* a, const double* b) noexcept;
  /// y[i] += alpha * x[i]
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y) noexcept;
  /// sum_k vals[k] * x[idx[k]]  (one CSR row against a dense vector)
  double (*gather_dot)(std::size_t nnz, const double* vals, const std::int32_t* idx,
                       const double* x) noexcept;
  /// x[i] *= alpha
  void (*scal)(std::size_t n, double alpha, double* x) noexcept;
};

const KernelTable& scalar_kernels() noexcept;

/// Table for `isa`, or nullptr when that variant is not compiled in or the
/// running CPU lacks the instructions.
const KernelTable* kernels_for(Isa isa) noexcept;

/// Best supported table. Honors FAIRNORM_SIMD={scalar,avx2,neon,auto}; an
/// unsupported request falls back to scalar.
const KernelTable& active() noexcept;

}  // namespace fairnorm::simd

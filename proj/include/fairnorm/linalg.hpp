#pragma once

#include <cstddef>
#include <vector>

#include "fairnorm/graph.hpp"
#include "fairnorm/matrix.hpp"

namespace fairnorm {

struct JacobiOptions {
  int max_sweeps = 200;
  double threshold = 1e-12;  // relative off-diagonal size below which no rotation is applied
};

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi on a symmetric matrix. Throws ShapeError if not square.
SymmetricEigen symmetric_eigen(const Matrix& a, const JacobiOptions& opts = {});

struct SvdResult {
  std::vector<double> values;  // ascending, min(rows, cols) entries
  Matrix u;                    // rows x k, unit columns (zero column for a zero singular value)
  Matrix v;                    // cols x k
  int sweeps = 0;
};

/// One-sided (Hestenes) Jacobi: orthogonalizes columns, which is Jacobi on M^T M
/// without forming it, so small singular values keep absolute accuracy.
SvdResult dense_svd_full(const Matrix& m, const JacobiOptions& opts = {},
                         std::size_t cap = kDenseCap);
std::vector<double> dense_svd(const Matrix& m, const JacobiOptions& opts = {},
                              std::size_t cap = kDenseCap);

/// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues at or below
/// rel_cutoff * max eigenvalue are treated as zero.
Matrix pseudo_inverse_psd(const Matrix& a, double rel_cutoff = 1e-12);

/// Matrix-vector product.
std::vector<double> matvec(const Matrix& a, std::span<const double> x);

}  // namespace fairnorm

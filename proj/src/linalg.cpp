#include "fairnorm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairnorm/error.hpp"
#include "fairnorm/simd/kernels.hpp"

namespace fairnorm {

namespace {

std::vector<std::size_t> ascending_order(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& a_in, const JacobiOptions& opts) {
  if (a_in.rows() != a_in.cols()) throw ShapeError("symmetric_eigen: matrix not square");
  const std::size_t n = a_in.rows();
  Matrix a = a_in;
  Matrix v = Matrix::identity(n);
  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double app = a(p, p);
        const double aqq = a(q, q);
        if (std::abs(apq) < 1e-300) continue;
        if (std::abs(apq) <= opts.threshold * std::sqrt(std::abs(app * aqq))) continue;
        rotated = true;
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  const auto order = ascending_order(diag);
  SymmetricEigen out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = diag[order[k]];
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

SvdResult dense_svd_full(const Matrix& m, const JacobiOptions& opts, std::size_t cap) {
  if (m.rows() > cap || m.cols() > cap)
    throw CapacityError("dense_svd: dimension exceeds cap of " + std::to_string(cap));
  // Work on whichever orientation has fewer columns; swap u and v afterwards.
  const bool transposed = m.cols() > m.rows();
  // Columns are stored as rows of `w` so rotations touch contiguous memory.
  Matrix w = transposed ? m : transpose(m);  // k x len
  const std::size_t k = w.rows();
  const std::size_t len = w.cols();
  Matrix vt = Matrix::identity(k);  // rows are the accumulated right vectors
  const simd::KernelTable& kt = simd::active();

  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        double* wi = w.row(i).data();
        double* wj = w.row(j).data();
        const double alpha = kt.dot(len, wi, wi);
        const double beta = kt.dot(len, wj, wj);
        const double gamma = kt.dot(len, wi, wj);
        if (gamma == 0.0) continue;
        if (std::abs(gamma) <= opts.threshold * std::sqrt(alpha * beta)) continue;
        if (alpha < 1e-300 || beta < 1e-300) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < len; ++r) {
          const double a = wi[r];
          const double b = wj[r];
          wi[r] = c * a - s * b;
          wj[r] = s * a + c * b;
        }
        double* vi = vt.row(i).data();
        double* vj = vt.row(j).data();
        for (std::size_t r = 0; r < k; ++r) {
          const double a = vi[r];
          const double b = vj[r];
          vi[r] = c * a - s * b;
          vj[r] = s * a + c * b;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(k);
  for (std::size_t i = 0; i < k; ++i) sigma[i] = vec_norm2(w.row(i));
  const auto order = ascending_order(sigma);

  SvdResult out;
  out.sweeps = sweep;
  out.values.resize(k);
  Matrix left(len, k), right(k, k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t src = order[c];
    out.values[c] = sigma[src];
    const double inv = sigma[src] > 0.0 ? 1.0 / sigma[src] : 0.0;
    for (std::size_t r = 0; r < len; ++r) left(r, c) = w(src, r) * inv;
    for (std::size_t r = 0; r < k; ++r) right(r, c) = vt(src, r);
  }
  if (transposed) {
    out.u = std::move(right);
    out.v = std::move(left);
  } else {
    out.u = std::move(left);
    out.v = std::move(right);
  }
  return out;
}

std::vector<double> dense_svd(const Matrix& m, const JacobiOptions& opts, std::size_t cap) {
  return dense_svd_full(m, opts, cap).values;
}

Matrix pseudo_inverse_psd(const Matrix& a, double rel_cutoff) {
  const SymmetricEigen eig = symmetric_eigen(a);
  const std::size_t n = a.rows();
  double top = 0.0;
  for (double l : eig.values) top = std::max(top, std::abs(l));
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l = eig.values[k];
    if (l <= rel_cutoff * top || l <= 0.0) continue;
    for (std::size_t r = 0; r < n; ++r) {
      const double vr = eig.vectors(r, k) / l;
      for (std::size_t c = 0; c < n; ++c) out(r, c) += vr * eig.vectors(c, k);
    }
  }
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw ShapeError("matvec: length mismatch");
  std::vector<double> y(a.rows());
  const simd::KernelTable& kt = simd::active();
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = kt.dot(a.cols(), a.row(r).data(), x.data());
  return y;
}

}  // namespace fairnorm

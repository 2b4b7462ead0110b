#include "fairnorm/layers.hpp"

#include <cmath>
#include <string>

#include "fairnorm/error.hpp"
#include "fairnorm/rng.hpp"

namespace fairnorm {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unsupported activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "unknown";
}

double lipschitz_constant(Activation) noexcept { return 1.0; }

double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::sigmoid:
      // Split on sign so exp never overflows.
      if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
      {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
    case Activation::identity:
      return z;
  }
  return z;
}

double activation_derivative(Activation a, double z) noexcept {
  switch (a) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = activate(Activation::sigmoid, z);
      return s * (1.0 - s);
    }
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

Matrix activation_forward(Activation a, const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.size(); ++i) out.data()[i] = activate(a, z.data()[i]);
  return out;
}

Matrix activation_backward(Activation a, const Matrix& z, const Matrix& upstream) {
  if (!z.same_shape(upstream)) throw ShapeError("activation_backward: shape mismatch");
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.size(); ++i)
    out.data()[i] = upstream.data()[i] * activation_derivative(a, z.data()[i]);
  return out;
}

Matrix linear_forward(const DenseParam& w, const Matrix& h) { return matmul(w.value, h); }

Matrix linear_backward(DenseParam& w, const Matrix& h, const Matrix& upstream) {
  if (upstream.rows() != w.value.rows() || upstream.cols() != h.cols())
    throw ShapeError("linear_backward: upstream gradient shape mismatch");
  add_scaled(w.grad, 1.0, matmul_bt(upstream, h));
  return matmul_at(w.value, upstream);
}

Matrix gcn_layer_forward(const DenseParam& w, const Matrix& h, const AggregationOperator& op,
                         GcnCache* cache) {
  Matrix z = spmm(op, h);
  Matrix out = matmul(w.value, z);
  if (cache) cache->aggregated = std::move(z);
  return out;
}

Matrix gcn_layer_backward(DenseParam& w, const GcnCache& cache, const AggregationOperator& op,
                          const Matrix& upstream) {
  Matrix dz = linear_backward(w, cache.aggregated, upstream);
  return spmm(op, dz);
}

Matrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw ShapeError("glorot_init: dimensions must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng = make_rng(seed, 0x61);
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace fairnorm

#pragma once

#include <cstdint>
#include <string_view>

#include "fairnorm/graph.hpp"
#include "fairnorm/matrix.hpp"

namespace fairnorm {

/// A learnable tensor with its gradient and Adam moment buffers.
struct DenseParam {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  DenseParam() = default;
  explicit DenseParam(Matrix v)
      : value(std::move(v)),
        grad(value.rows(), value.cols()),
        adam_m(value.rows(), value.cols()),
        adam_v(value.rows(), value.cols()) {}

  void zero_grad() noexcept { grad.fill(0.0); }
};

enum class Activation { relu, sigmoid, identity };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a) noexcept;
/// All supported activations are 1-Lipschitz.
double lipschitz_constant(Activation a) noexcept;

double activate(Activation a, double z) noexcept;
/// d Act / dz. ReLU uses subgradient 0 at z == 0.
double activation_derivative(Activation a, double z) noexcept;

Matrix activation_forward(Activation a, const Matrix& z);
/// upstream (dL/dAct) -> dL/dz, evaluated at pre-activation `z`.
Matrix activation_backward(Activation a, const Matrix& z, const Matrix& upstream);

/// W * h.
Matrix linear_forward(const DenseParam& w, const Matrix& h);
/// Accumulates dL/dW = upstream * h^T into w.grad; returns dL/dh = W^T * upstream.
Matrix linear_backward(DenseParam& w, const Matrix& h, const Matrix& upstream);

/// Intermediate of a GCN layer: the aggregated input H * Q.
struct GcnCache {
  Matrix aggregated;
};

/// W * (H * Q), the pre-normalization, pre-activation value.
Matrix gcn_layer_forward(const DenseParam& w, const Matrix& h, const AggregationOperator& op,
                         GcnCache* cache = nullptr);
/// Accumulates dL/dW; returns dL/dH = (W^T * upstream) * Q (Q symmetric).
Matrix gcn_layer_backward(DenseParam& w, const GcnCache& cache, const AggregationOperator& op,
                          const Matrix& upstream);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); fan_in = cols, fan_out = rows.
Matrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace fairnorm

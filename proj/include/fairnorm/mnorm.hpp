#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairnorm/graph.hpp"
#include "fairnorm/layers.hpp"
#include "fairnorm/matrix.hpp"

namespace fairnorm {

constexpr double kDefaultNormEps = 1e-5;

/// Column partition the normalization statistics are taken over.
/// Two groups for the per-group layer, one group for whole-graph normalization.
struct Partition {
  std::size_t n_nodes = 0;
  std::vector<std::vector<NodeId>> groups;

  std::size_t n_groups() const noexcept { return groups.size(); }
};

Partition sensitive_partition(std::span<const std::uint8_t> sensitive);
Partition single_partition(std::size_t n_nodes);

/// Per-group alpha (mean-removal weight), gamma (scale) and beta (shift), each F x 1.
struct GroupAffine {
  DenseParam alpha;
  DenseParam gamma;
  DenseParam beta;
};

struct MNormParams {
  std::vector<GroupAffine> groups;
  double eps = kDefaultNormEps;

  std::size_t n_features() const noexcept {
    return groups.empty() ? 0 : groups.front().gamma.value.rows();
  }
  void zero_grad() noexcept;
};

/// alpha = gamma = 1, beta = 0 for every group.
MNormParams mnorm_init(std::size_t f, std::size_t n_groups = 2, double eps = kDefaultNormEps);

struct GroupStats {
  std::vector<double> mean;
  std::vector<double> sigma;  // sqrt(population variance + eps^2)
};

struct MNormStats {
  std::vector<GroupStats> groups;
};

struct MNormCache {
  Matrix input;
  MNormStats stats;
  bool valid = false;
};

MNormStats compute_group_stats(const Matrix& r, const Partition& part, double eps);

Matrix mnorm_forward(const MNormParams& params, const Matrix& r, const Partition& part,
                     MNormCache* cache = nullptr);

/// Accumulates the gradients of all affine parameters and returns dL/dr, including
/// the paths through the group mean and sigma.
Matrix mnorm_backward(MNormParams& params, const MNormCache& cache, const Partition& part,
                      const Matrix& upstream);

/// Routes gradients w.r.t. one group's mean and sigma back to the input columns of that group.
void accumulate_stat_grads(const MNormCache& cache, const Partition& part, std::size_t group,
                           std::span<const double> dmean, std::span<const double> dsigma,
                           Matrix& input_grad);

}  // namespace fairnorm

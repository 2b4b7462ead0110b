#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fairnorm/layers.hpp"
#include "fairnorm/matrix.hpp"
#include "fairnorm/mnorm.hpp"

namespace fairnorm {

struct FairnessLossTerms {
  double l_mu = 0.0;
  double l_delta = 0.0;
  double kappa = 0.0;
  double tau = 0.0;

  double weighted() const noexcept { return kappa * l_mu + tau * l_delta; }
};

/// Closed-form post-normalization group mean: gamma * m * (1 - alpha) / sigma + beta.
std::vector<double> normalized_group_mean(const GroupAffine& affine, const GroupStats& stats);

/// Squared Euclidean distance between two group mean vectors.
double loss_mu(std::span<const double> mean0, std::span<const double> mean1);
/// Closed form evaluated from a two-group layer's parameters and statistics.
double loss_mu(const MNormParams& params, const MNormStats& stats);

/// Sum over groups and features of (gamma / sigma * max_j |r_ij - m_i|)^2.
double loss_delta(const MNormParams& params, const MNormCache& cache, const Partition& part);

/// The *_backward variants return the loss value and, when weight != 0, add weight * dL/dtheta
/// to the affine parameter gradients and weight * dL/dr to `input_grad`.
double loss_mu_backward(MNormParams& params, const MNormCache& cache, const Partition& part,
                        double weight, Matrix& input_grad);
/// The max routes to a single element per (group, feature): lowest node index among ties.
double loss_delta_backward(MNormParams& params, const MNormCache& cache, const Partition& part,
                           double weight, Matrix& input_grad);

/// |cov(s, p)| over masked nodes with 1/M normalization.
double loss_covariance_baseline(std::span<const double> probs,
                                std::span<const std::uint8_t> sensitive,
                                std::span<const std::uint8_t> mask);
/// d|cov|/dp_j (zero outside the mask, and everywhere when cov == 0).
std::vector<double> covariance_baseline_grad(std::span<const double> probs,
                                             std::span<const std::uint8_t> sensitive,
                                             std::span<const std::uint8_t> mask);

/// 1 where sigmoid(logit) >= 0.5.
std::vector<std::uint8_t> hard_predictions(std::span<const double> logits);

/// nullopt when a group has no masked node.
std::optional<double> metric_statistical_parity(std::span<const std::uint8_t> predictions,
                                                std::span<const std::uint8_t> sensitive,
                                                std::span<const std::uint8_t> mask);
/// nullopt when a group has no masked positive-label node.
std::optional<double> metric_equal_opportunity(std::span<const std::uint8_t> predictions,
                                               std::span<const std::uint8_t> labels,
                                               std::span<const std::uint8_t> sensitive,
                                               std::span<const std::uint8_t> mask);

/// p >= 1; +infinity selects the max norm.
double lp_norm(std::span<const double> v, double p);

struct GroupGapReport {
  double mu_gap_p = 0.0;
  double bound_rhs = 0.0;
  double p = 2.0;
  double lipschitz = 1.0;

  bool holds(double slack = 0.0) const noexcept { return mu_gap_p <= bound_rhs + slack; }
};

/// Compares the post-activation group-mean gap against the bound built from the
/// pre-activation group means and maximal deviations. h0, h1 are F x |S^n|.
GroupGapReport check_theorem2_bound(const Matrix& h0, const Matrix& h1, Activation act, double p);

}  // namespace fairnorm

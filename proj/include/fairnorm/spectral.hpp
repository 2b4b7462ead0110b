#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fairnorm/graph.hpp"
#include "fairnorm/linalg.hpp"
#include "fairnorm/matrix.hpp"

namespace fairnorm {

struct SpectrumReport {
  std::vector<double> lambda;  // singular values of Q, ascending
  std::vector<double> gamma;   // singular values of Q N0 N1, ascending
  double tol = 0.0;
  bool interlacing_ok = false;
  bool zero_count_ok = false;
  double max_violation = 0.0;  // largest amount any inequality is exceeded by (0 if none)

  bool ok() const noexcept { return interlacing_ok && zero_count_ok; }
};

/// Q N0 N1 for a dense Q: subtracts each row's per-group mean over that group's columns.
Matrix apply_group_shift(const Matrix& q, std::span<const std::uint8_t> sensitive);

/// Checks lambda[j] <= gamma[j+2] and gamma[j] <= lambda[j] (ascending order, within tol),
/// and that the two smallest gamma are <= tol, where tol = rel_tol * sigma_max(Q).
/// Both groups must be non-empty.
SpectrumReport verify_interlacing(const Matrix& q, std::span<const std::uint8_t> sensitive,
                                  double rel_tol = 1e-8, const JacobiOptions& opts = {});

struct ProjectionReport {
  double symmetry_err = 0.0;
  double idempotence_err = 0.0;
  double commutation_err = 0.0;
  double annihilation_err = 0.0;
  double tol = 0.0;

  bool ok() const noexcept {
    return symmetry_err <= tol && idempotence_err <= tol && commutation_err <= tol &&
           annihilation_err <= tol;
  }
};

/// Dense checks of N0, N1 and N0 N1: symmetric, idempotent, commuting, and annihilating both
/// group indicators. Singleton groups are allowed.
ProjectionReport verify_projection_algebra(std::span<const std::uint8_t> sensitive, double tol,
                                           std::size_t cap = kDenseCap);

struct LinearGnnConfig {
  std::size_t n_nodes = 80;
  std::size_t f_features = 8;
  std::uint64_t seed = 0;
  bool shift = false;
  double group_offset = 3.0;  // magnitude of the per-group mean offset
  double node_signal = 1.0;   // node-specific mean component; makes the mean full rank
  double noise = 0.5;         // std of the Gaussian feature noise around the mean
  double p_intra = 0.12;
  double p_inter = 0.01;
  double threshold = 1e-6;    // relative to ||w*||
  std::size_t max_iterations = 2'000'000;
  int max_resamples = 50;
  double envelope_slack = 1e-9;

  void validate() const;
};

struct ConvergenceTrial {
  std::uint64_t seed = 0;
  std::size_t n_nodes = 0;
  std::size_t f_features = 0;
  bool shift = false;
  int resamples = 0;
  double sigma_min = 0.0;  // smallest positive eigenvalue of Z Z^T
  double sigma_max = 0.0;
  double rate = 0.0;       // 1 - sigma_min / sigma_max
  double w_star_norm = 0.0;
  long epochs_to_threshold = -1;  // -1 if not reached within max_iterations
  std::vector<double> residuals;  // ||w_t - w*|| for t = 0, 1, ...
  bool envelope_ok = true;
  double max_envelope_violation = 0.0;
  bool monotone = true;
};

/// Exact gradient descent w <- w - eta (Z Z^T w - Z y), eta = 1 / sigma_max(Z Z^T), from w0
/// (zero when empty), tracking the distance to the pseudo-inverse solution.
ConvergenceTrial run_gradient_descent(const Matrix& z, std::span<const double> y,
                                      double threshold, std::size_t max_iterations,
                                      std::span<const double> w0 = {},
                                      double envelope_slack = 1e-9);

struct LinearGnnInstance {
  AggregationOperator op;
  Matrix mean;      // F x N expected features
  Matrix features;  // F x N sample
  std::vector<double> y;
  int resamples = 0;
};

/// Samples graph, features and targets. Redraws (up to max_resamples) while some
/// N-dimensional singular vector of E[XQ] is numerically orthogonal to both group indicators.
LinearGnnInstance sample_linear_gnn_instance(const LinearGnnConfig& cfg);

/// Gradient descent on Z = XQ, or Z = XQ N0 N1 when cfg.shift is set.
ConvergenceTrial run_linear_gnn_trial(const LinearGnnConfig& cfg);

}  // namespace fairnorm

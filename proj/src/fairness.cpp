#include "fairnorm/fairness.hpp"

#include <cmath>
#include <limits>

#include "fairnorm/error.hpp"

namespace fairnorm {

std::vector<double> normalized_group_mean(const GroupAffine& affine, const GroupStats& stats) {
  const std::size_t f = stats.mean.size();
  std::vector<double> out(f);
  for (std::size_t i = 0; i < f; ++i) {
    out[i] = affine.gamma.value(i, 0) * stats.mean[i] * (1.0 - affine.alpha.value(i, 0)) /
                 stats.sigma[i] +
             affine.beta.value(i, 0);
  }
  return out;
}

double loss_mu(std::span<const double> mean0, std::span<const double> mean1) {
  if (mean0.size() != mean1.size()) throw ShapeError("loss_mu: vector lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < mean0.size(); ++i) s += (mean0[i] - mean1[i]) * (mean0[i] - mean1[i]);
  return s;
}

namespace {

void require_two_groups(const MNormParams& params, std::size_t stat_groups) {
  if (params.groups.size() != 2 || stat_groups != 2)
    throw ConfigError("group-mean regularizer needs a two-group normalization layer");
}

}  // namespace

double loss_mu(const MNormParams& params, const MNormStats& stats) {
  require_two_groups(params, stats.groups.size());
  return loss_mu(normalized_group_mean(params.groups[0], stats.groups[0]),
                 normalized_group_mean(params.groups[1], stats.groups[1]));
}

double loss_mu_backward(MNormParams& params, const MNormCache& cache, const Partition& part,
                        double weight, Matrix& input_grad) {
  require_two_groups(params, cache.stats.groups.size());
  const auto mu0 = normalized_group_mean(params.groups[0], cache.stats.groups[0]);
  const auto mu1 = normalized_group_mean(params.groups[1], cache.stats.groups[1]);
  const double value = loss_mu(mu0, mu1);
  if (weight == 0.0) return value;

  const std::size_t f = mu0.size();
  std::vector<double> dmean(f), dsigma(f);
  for (std::size_t g = 0; g < 2; ++g) {
    GroupAffine& ga = params.groups[g];
    const GroupStats& gs = cache.stats.groups[g];
    for (std::size_t i = 0; i < f; ++i) {
      const double c = weight * 2.0 * (mu0[i] - mu1[i]) * (g == 0 ? 1.0 : -1.0);
      const double m = gs.mean[i];
      const double s = gs.sigma[i];
      const double alpha = ga.alpha.value(i, 0);
      const double gamma = ga.gamma.value(i, 0);
      ga.gamma.grad(i, 0) += c * m * (1.0 - alpha) / s;
      ga.beta.grad(i, 0) += c;
      ga.alpha.grad(i, 0) += -c * gamma * m / s;
      dmean[i] = c * gamma * (1.0 - alpha) / s;
      dsigma[i] = -c * gamma * m * (1.0 - alpha) / (s * s);
    }
    accumulate_stat_grads(cache, part, g, dmean, dsigma, input_grad);
  }
  return value;
}

namespace {

struct MaxDeviation {
  double value;
  NodeId arg;
};

MaxDeviation max_deviation(std::span<const double> row, const std::vector<NodeId>& members,
                           double m) {
  MaxDeviation best{-1.0, -1};
  for (NodeId j : members) {
    const double d = std::abs(row[j] - m);
    if (d > best.value) best = {d, j};  // strict: earliest index wins ties
  }
  return best;
}

}  // namespace

double loss_delta(const MNormParams& params, const MNormCache& cache, const Partition& part) {
  Matrix scratch;
  MNormParams copy = params;
  return loss_delta_backward(copy, cache, part, 0.0, scratch);
}

double loss_delta_backward(MNormParams& params, const MNormCache& cache, const Partition& part,
                           double weight, Matrix& input_grad) {
  if (!cache.valid) throw ShapeError("loss_delta: no cached forward pass");
  if (params.groups.size() != part.n_groups())
    throw ShapeError("loss_delta: parameter groups != partition groups");
  const Matrix& r = cache.input;
  double value = 0.0;
  std::vector<double> dmean(r.rows()), dsigma(r.rows());
  for (std::size_t g = 0; g < part.n_groups(); ++g) {
    GroupAffine& ga = params.groups[g];
    const GroupStats& gs = cache.stats.groups[g];
    for (std::size_t i = 0; i < r.rows(); ++i) {
      const double m = gs.mean[i];
      const double s = gs.sigma[i];
      const double gamma = ga.gamma.value(i, 0);
      const MaxDeviation md = max_deviation(r.row(i), part.groups[g], m);
      const double d = gamma * md.value / s;
      value += d * d;
      if (weight == 0.0) continue;

      // d(d^2) = 2d * [D/s dgamma + gamma/s dD - gamma D/s^2 dsigma], dD = sign * (dr_j* - dm)
      const double c = weight * 2.0 * d;
      const double sign = r(i, static_cast<std::size_t>(md.arg)) >= m ? 1.0 : -1.0;
      ga.gamma.grad(i, 0) += c * md.value / s;
      input_grad(i, static_cast<std::size_t>(md.arg)) += c * gamma / s * sign;
      dmean[i] = -c * gamma / s * sign;
      dsigma[i] = -c * gamma * md.value / (s * s);
    }
    if (weight != 0.0) accumulate_stat_grads(cache, part, g, dmean, dsigma, input_grad);
  }
  return value;
}

namespace {

void check_lengths(std::size_t n, std::span<const std::uint8_t> a,
                   std::span<const std::uint8_t> b) {
  if (a.size() != n || b.size() != n) throw ShapeError("fairness: vector lengths differ");
}

struct CovParts {
  double cov = 0.0;
  double s_mean = 0.0;
  double count = 0.0;
};

CovParts covariance(std::span<const double> probs, std::span<const std::uint8_t> sensitive,
                    std::span<const std::uint8_t> mask) {
  check_lengths(probs.size(), sensitive, mask);
  CovParts c;
  double s_sum = 0.0, p_sum = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (!mask[j]) continue;
    c.count += 1.0;
    s_sum += sensitive[j];
    p_sum += probs[j];
  }
  if (c.count == 0.0) throw ShapeError("covariance: empty mask");
  c.s_mean = s_sum / c.count;
  const double p_mean = p_sum / c.count;
  for (std::size_t j = 0; j < probs.size(); ++j)
    if (mask[j]) c.cov += (sensitive[j] - c.s_mean) * (probs[j] - p_mean);
  c.cov /= c.count;
  return c;
}

}  // namespace

double loss_covariance_baseline(std::span<const double> probs,
                                std::span<const std::uint8_t> sensitive,
                                std::span<const std::uint8_t> mask) {
  return std::abs(covariance(probs, sensitive, mask).cov);
}

std::vector<double> covariance_baseline_grad(std::span<const double> probs,
                                             std::span<const std::uint8_t> sensitive,
                                             std::span<const std::uint8_t> mask) {
  const CovParts c = covariance(probs, sensitive, mask);
  std::vector<double> grad(probs.size(), 0.0);
  if (c.cov == 0.0) return grad;
  const double sign = c.cov > 0.0 ? 1.0 : -1.0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    if (mask[j]) grad[j] = sign * (sensitive[j] - c.s_mean) / c.count;
  return grad;
}

std::vector<std::uint8_t> hard_predictions(std::span<const double> logits) {
  std::vector<std::uint8_t> out(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = logits[j] >= 0.0 ? 1 : 0;
  return out;
}

namespace {

std::optional<double> rate_gap(std::span<const std::uint8_t> predictions,
                               std::span<const std::uint8_t> sensitive,
                               std::span<const std::uint8_t> mask,
                               std::span<const std::uint8_t> labels) {
  std::size_t total[2] = {0, 0};
  std::size_t positive[2] = {0, 0};
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (!mask[j]) continue;
    if (!labels.empty() && labels[j] != 1) continue;
    const int g = sensitive[j] ? 1 : 0;
    ++total[g];
    positive[g] += predictions[j] ? 1 : 0;
  }
  if (total[0] == 0 || total[1] == 0) return std::nullopt;
  return std::abs(static_cast<double>(positive[0]) / static_cast<double>(total[0]) -
                  static_cast<double>(positive[1]) / static_cast<double>(total[1]));
}

}  // namespace

std::optional<double> metric_statistical_parity(std::span<const std::uint8_t> predictions,
                                                std::span<const std::uint8_t> sensitive,
                                                std::span<const std::uint8_t> mask) {
  check_lengths(predictions.size(), sensitive, mask);
  return rate_gap(predictions, sensitive, mask, {});
}

std::optional<double> metric_equal_opportunity(std::span<const std::uint8_t> predictions,
                                               std::span<const std::uint8_t> labels,
                                               std::span<const std::uint8_t> sensitive,
                                               std::span<const std::uint8_t> mask) {
  check_lengths(predictions.size(), sensitive, mask);
  if (labels.size() != predictions.size()) throw ShapeError("fairness: vector lengths differ");
  return rate_gap(predictions, sensitive, mask, labels);
}

double lp_norm(std::span<const double> v, double p) {
  if (!(p >= 1.0)) throw ConfigError("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  if (p == 2.0) return vec_norm2(v);
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

GroupGapReport check_theorem2_bound(const Matrix& h0, const Matrix& h1, Activation act, double p) {
  if (h0.rows() != h1.rows()) throw ShapeError("bound check: feature counts differ");
  if (h0.cols() == 0 || h1.cols() == 0) throw ShapeError("bound check: empty group");
  const std::size_t f = h0.rows();

  const Matrix* groups[2] = {&h0, &h1};
  std::vector<double> act_mean[2], pre_mean[2], max_dev[2];
  for (int g = 0; g < 2; ++g) {
    const Matrix& h = *groups[g];
    const double n = static_cast<double>(h.cols());
    act_mean[g].assign(f, 0.0);
    pre_mean[g].assign(f, 0.0);
    max_dev[g].assign(f, 0.0);
    for (std::size_t i = 0; i < f; ++i) {
      double s = 0.0, sa = 0.0;
      for (double x : h.row(i)) {
        s += x;
        sa += activate(act, x);
      }
      pre_mean[g][i] = s / n;
      act_mean[g][i] = sa / n;
      for (double x : h.row(i)) max_dev[g][i] = std::max(max_dev[g][i], std::abs(x - pre_mean[g][i]));
    }
  }
  std::vector<double> act_gap(f), pre_gap(f);
  for (std::size_t i = 0; i < f; ++i) {
    act_gap[i] = act_mean[0][i] - act_mean[1][i];
    pre_gap[i] = pre_mean[0][i] - pre_mean[1][i];
  }
  GroupGapReport rep;
  rep.p = p;
  rep.lipschitz = lipschitz_constant(act);
  rep.mu_gap_p = lp_norm(act_gap, p);
  rep.bound_rhs =
      rep.lipschitz * (lp_norm(pre_gap, p) + lp_norm(max_dev[0], p) + lp_norm(max_dev[1], p));
  return rep;
}

}  // namespace fairnorm

#include "fairnorm/mnorm.hpp"

#include <cmath>

#include "fairnorm/error.hpp"

namespace fairnorm {

Partition sensitive_partition(std::span<const std::uint8_t> sensitive) {
  Partition p;
  p.n_nodes = sensitive.size();
  p.groups = {group_members(sensitive, 0), group_members(sensitive, 1)};
  return p;
}

Partition single_partition(std::size_t n_nodes) {
  Partition p;
  p.n_nodes = n_nodes;
  p.groups.resize(1);
  p.groups[0].resize(n_nodes);
  for (std::size_t j = 0; j < n_nodes; ++j) p.groups[0][j] = static_cast<NodeId>(j);
  return p;
}

void MNormParams::zero_grad() noexcept {
  for (auto& g : groups) {
    g.alpha.zero_grad();
    g.gamma.zero_grad();
    g.beta.zero_grad();
  }
}

MNormParams mnorm_init(std::size_t f, std::size_t n_groups, double eps) {
  if (f == 0) throw ShapeError("mnorm_init: feature count must be positive");
  if (n_groups == 0) throw ConfigError("mnorm_init: need at least one group");
  if (!(eps > 0.0)) throw ConfigError("mnorm_init: eps must be positive");
  MNormParams p;
  p.eps = eps;
  for (std::size_t g = 0; g < n_groups; ++g) {
    p.groups.push_back(GroupAffine{DenseParam(Matrix(f, 1, 1.0)), DenseParam(Matrix(f, 1, 1.0)),
                                   DenseParam(Matrix(f, 1, 0.0))});
  }
  return p;
}

namespace {

void check_partition(const Matrix& r, const Partition& part) {
  if (r.cols() != part.n_nodes) throw ShapeError("mnorm: input column count != partition size");
  for (const auto& members : part.groups)
    if (members.empty()) throw ShapeError("mnorm: empty group");
}

}  // namespace

MNormStats compute_group_stats(const Matrix& r, const Partition& part, double eps) {
  check_partition(r, part);
  MNormStats stats;
  stats.groups.resize(part.n_groups());
  const std::size_t f = r.rows();
  for (std::size_t g = 0; g < part.n_groups(); ++g) {
    const auto& members = part.groups[g];
    const double n = static_cast<double>(members.size());
    GroupStats& gs = stats.groups[g];
    gs.mean.assign(f, 0.0);
    gs.sigma.assign(f, 0.0);
    for (std::size_t i = 0; i < f; ++i) {
      auto row = r.row(i);
      double sum = 0.0;
      for (NodeId j : members) sum += row[j];
      const double m = sum / n;
      double ss = 0.0;
      for (NodeId j : members) ss += (row[j] - m) * (row[j] - m);
      gs.mean[i] = m;
      gs.sigma[i] = std::sqrt(ss / n + eps * eps);
    }
  }
  return stats;
}

Matrix mnorm_forward(const MNormParams& params, const Matrix& r, const Partition& part,
                     MNormCache* cache) {
  if (params.groups.size() != part.n_groups())
    throw ShapeError("mnorm_forward: parameter groups != partition groups");
  if (r.rows() != params.n_features()) throw ShapeError("mnorm_forward: feature count mismatch");
  MNormStats stats = compute_group_stats(r, part, params.eps);

  Matrix out(r.rows(), r.cols());
  for (std::size_t g = 0; g < part.n_groups(); ++g) {
    const GroupAffine& ga = params.groups[g];
    const GroupStats& gs = stats.groups[g];
    for (std::size_t i = 0; i < r.rows(); ++i) {
      const double shift = ga.alpha.value(i, 0) * gs.mean[i];
      const double scale = ga.gamma.value(i, 0) / gs.sigma[i];
      const double beta = ga.beta.value(i, 0);
      auto in = r.row(i);
      auto o = out.row(i);
      for (NodeId j : part.groups[g]) o[j] = scale * (in[j] - shift) + beta;
    }
  }
  if (cache) {
    cache->input = r;
    cache->stats = std::move(stats);
    cache->valid = true;
  }
  return out;
}

Matrix mnorm_backward(MNormParams& params, const MNormCache& cache, const Partition& part,
                      const Matrix& upstream) {
  if (!cache.valid) throw ShapeError("mnorm_backward: no cached forward pass");
  const Matrix& r = cache.input;
  if (!upstream.same_shape(r)) throw ShapeError("mnorm_backward: upstream shape mismatch");

  Matrix dr(r.rows(), r.cols());
  for (std::size_t g = 0; g < part.n_groups(); ++g) {
    GroupAffine& ga = params.groups[g];
    const GroupStats& gs = cache.stats.groups[g];
    const auto& members = part.groups[g];
    const double n = static_cast<double>(members.size());
    for (std::size_t i = 0; i < r.rows(); ++i) {
      const double m = gs.mean[i];
      const double s = gs.sigma[i];
      const double alpha = ga.alpha.value(i, 0);
      const double gamma = ga.gamma.value(i, 0);
      auto in = r.row(i);
      auto up = upstream.row(i);

      double sum_g = 0.0;
      double sum_gx = 0.0;
      for (NodeId j : members) {
        const double xhat = (in[j] - alpha * m) / s;
        sum_g += up[j];
        sum_gx += up[j] * xhat;
      }
      ga.beta.grad(i, 0) += sum_g;
      ga.gamma.grad(i, 0) += sum_gx;
      ga.alpha.grad(i, 0) += -gamma * m / s * sum_g;

      // xhat_j = (r_j - alpha m) / s with m, s functions of the whole group.
      const double mean_g = sum_g / n;
      const double k = sum_gx / (n * s);
      auto d = dr.row(i);
      for (NodeId j : members)
        d[j] = gamma / s * (up[j] - alpha * mean_g - k * (in[j] - m));
    }
  }
  return dr;
}

void accumulate_stat_grads(const MNormCache& cache, const Partition& part, std::size_t group,
                           std::span<const double> dmean, std::span<const double> dsigma,
                           Matrix& input_grad) {
  const Matrix& r = cache.input;
  const GroupStats& gs = cache.stats.groups.at(group);
  const auto& members = part.groups.at(group);
  const double n = static_cast<double>(members.size());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const double dm = dmean.empty() ? 0.0 : dmean[i];
    const double ds = dsigma.empty() ? 0.0 : dsigma[i];
    if (dm == 0.0 && ds == 0.0) continue;
    auto in = r.row(i);
    auto out = input_grad.row(i);
    const double m = gs.mean[i];
    const double ds_scaled = ds / (n * gs.sigma[i]);
    for (NodeId j : members) out[j] += dm / n + ds_scaled * (in[j] - m);
  }
}

}  // namespace fairnorm

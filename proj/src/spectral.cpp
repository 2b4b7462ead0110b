#include "fairnorm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fairnorm/error.hpp"
#include "fairnorm/rng.hpp"

namespace fairnorm {

namespace {

AggregationOperator partition_only(std::size_t n, std::span<const std::uint8_t> sensitive) {
  if (sensitive.size() != n) throw ShapeError("partition length != matrix size");
  return build_gcn_operator(Adjacency::from_edges(n, {}), sensitive);
}

}  // namespace

Matrix apply_group_shift(const Matrix& q, std::span<const std::uint8_t> sensitive) {
  const AggregationOperator op = partition_only(q.cols(), sensitive);
  Matrix out = q;
  shift_apply_inplace(out, op, 0);
  shift_apply_inplace(out, op, 1);
  return out;
}

SpectrumReport verify_interlacing(const Matrix& q, std::span<const std::uint8_t> sensitive,
                                  double rel_tol, const JacobiOptions& opts) {
  if (q.rows() != q.cols()) throw ShapeError("verify_interlacing: Q must be square");
  if (std::ranges::count(sensitive, std::uint8_t{1}) == 0 ||
      std::ranges::count(sensitive, std::uint8_t{0}) == 0)
    throw ConfigError("verify_interlacing: both groups must be non-empty");
  SpectrumReport rep;
  rep.lambda = dense_svd(q, opts);
  rep.gamma = dense_svd(apply_group_shift(q, sensitive), opts);
  const std::size_t n = rep.lambda.size();
  rep.tol = rel_tol * (n ? rep.lambda.back() : 0.0);

  double worst = 0.0;
  auto record = [&](double excess) { worst = std::max(worst, excess); };
  for (std::size_t j = 0; j < n; ++j) {
    record(rep.gamma[j] - rep.lambda[j]);
    if (j + 2 < n) record(rep.lambda[j] - rep.gamma[j + 2]);
  }
  rep.max_violation = worst;
  rep.interlacing_ok = worst <= rep.tol;
  rep.zero_count_ok = n >= 2 && rep.gamma[0] <= rep.tol && rep.gamma[1] <= rep.tol;
  return rep;
}

ProjectionReport verify_projection_algebra(std::span<const std::uint8_t> sensitive, double tol,
                                           std::size_t cap) {
  const std::size_t n = sensitive.size();
  const AggregationOperator op = partition_only(n, sensitive);
  const Matrix n0 = shift_matrix_dense(op, 0, cap);
  const Matrix n1 = shift_matrix_dense(op, 1, cap);
  const Matrix p01 = matmul(n0, n1);
  const Matrix p10 = matmul(n1, n0);

  ProjectionReport rep;
  rep.tol = tol;
  for (const Matrix* m : {&n0, &n1, &p01})
    rep.symmetry_err = std::max(rep.symmetry_err, max_abs_diff(*m, transpose(*m)));
  for (const Matrix* m : {&n0, &n1, &p01})
    rep.idempotence_err = std::max(rep.idempotence_err, max_abs_diff(matmul(*m, *m), *m));
  rep.commutation_err = max_abs_diff(p01, p10);
  for (int g = 0; g < 2; ++g) {
    for (double v : matvec(p01, op.indicator(g)))
      rep.annihilation_err = std::max(rep.annihilation_err, std::abs(v));
  }
  return rep;
}

void LinearGnnConfig::validate() const {
  if (n_nodes < 8) throw ConfigError("linear GNN trial: need at least 8 nodes");
  if (f_features == 0 || f_features + 2 > n_nodes)
    throw ConfigError("linear GNN trial: need 1 <= F <= N - 2");
  if (!(p_intra >= 0.0 && p_intra <= 1.0 && p_inter >= 0.0 && p_inter <= 1.0))
    throw ConfigError("linear GNN trial: edge probabilities must lie in [0, 1]");
  if (!(noise >= 0.0) || !(node_signal >= 0.0) || !(group_offset >= 0.0))
    throw ConfigError("linear GNN trial: scales must be nonnegative");
  if (!(threshold > 0.0)) throw ConfigError("linear GNN trial: threshold must be positive");
}

ConvergenceTrial run_gradient_descent(const Matrix& z, std::span<const double> y,
                                      double threshold, std::size_t max_iterations,
                                      std::span<const double> w0, double envelope_slack) {
  if (y.size() != z.cols()) throw ShapeError("gradient descent: target length != Z columns");
  const std::size_t f = z.rows();
  if (!w0.empty() && w0.size() != f) throw ShapeError("gradient descent: w0 length != Z rows");

  const Matrix a = matmul_bt(z, z);
  const std::vector<double> b = matvec(z, y);
  const SymmetricEigen eig = symmetric_eigen(a);

  ConvergenceTrial t;
  t.f_features = f;
  t.n_nodes = z.cols();
  t.sigma_max = eig.values.empty() ? 0.0 : eig.values.back();
  for (double l : eig.values) {
    if (l > 1e-12 * t.sigma_max) {
      t.sigma_min = l;
      break;
    }
  }
  t.rate = t.sigma_max > 0.0 ? 1.0 - t.sigma_min / t.sigma_max : 0.0;

  const std::vector<double> w_star = matvec(pseudo_inverse_psd(a), b);
  t.w_star_norm = vec_norm2(w_star);

  std::vector<double> w(f, 0.0);
  if (!w0.empty()) w.assign(w0.begin(), w0.end());
  std::vector<double> diff(f);
  auto residual = [&] {
    for (std::size_t i = 0; i < f; ++i) diff[i] = w[i] - w_star[i];
    return vec_norm2(diff);
  };
  const double r0 = residual();
  const double goal = threshold * t.w_star_norm;
  const double eta = t.sigma_max > 0.0 ? 1.0 / t.sigma_max : 0.0;
  const double mono_slack = 1e-12 * std::max(t.w_star_norm, r0);

  double envelope = r0;
  double prev = r0;
  t.residuals.push_back(r0);
  if (r0 <= goal) t.epochs_to_threshold = 0;
  std::vector<double> grad(f);
  for (std::size_t it = 1; t.epochs_to_threshold < 0 && it <= max_iterations; ++it) {
    const std::vector<double> aw = matvec(a, w);
    for (std::size_t i = 0; i < f; ++i) w[i] -= eta * (aw[i] - b[i]);
    const double r = residual();
    t.residuals.push_back(r);
    envelope *= t.rate;
    const double excess = r - (envelope + envelope_slack);
    if (excess > 0.0) {
      t.envelope_ok = false;
      t.max_envelope_violation = std::max(t.max_envelope_violation, excess);
    }
    if (r > prev + mono_slack) t.monotone = false;
    prev = r;
    if (r <= goal) t.epochs_to_threshold = static_cast<long>(it);
  }
  return t;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LinearGnnInstance sample_linear_gnn_instance(const LinearGnnConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_nodes;
  const std::size_t f = cfg.f_features;

  for (int attempt = 0; attempt <= cfg.max_resamples; ++attempt) {
    Rng rng = make_rng(cfg.seed, 0x4c47'0000ULL + static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Group sizes between N/4 and 3N/4, group membership shuffled over node ids.
    std::uniform_int_distribution<std::size_t> size_dist(n / 4, n - n / 4);
    const std::size_t n1 = size_dist(rng);
    std::vector<std::uint8_t> sensitive(n, 0);
    std::fill(sensitive.begin(), sensitive.begin() + static_cast<std::ptrdiff_t>(n1), 1);
    std::shuffle(sensitive.begin(), sensitive.end(), rng);

    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u + 1; v < n; ++v) {
        const double p = sensitive[u] == sensitive[v] ? cfg.p_intra : cfg.p_inter;
        if (unit(rng) < p) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
      }
    }

    LinearGnnInstance inst;
    inst.op = build_gcn_operator(Adjacency::from_edges(n, edges), sensitive);

    std::vector<double> offset[2] = {std::vector<double>(f), std::vector<double>(f)};
    for (auto& o : offset) {
      for (double& v : o) v = normal(rng);
      const double norm = vec_norm2(o);
      for (double& v : o) v *= cfg.group_offset / norm;
    }
    inst.mean = Matrix(f, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < f; ++i)
        inst.mean(i, j) = offset[sensitive[j]][i] + cfg.node_signal * normal(rng);
    inst.features = inst.mean;
    for (double& v : inst.features.values()) v += cfg.noise * normal(rng);
    inst.y.resize(n);
    for (double& v : inst.y) v = unit(rng) < 0.5 ? 1.0 : -1.0;

    // Every N-dimensional singular direction of E[XQ] must see at least one group indicator.
    const Matrix expected = transpose(spmm(inst.op, inst.mean));  // N x F
    const SvdResult svd = dense_svd_full(expected);
    const std::vector<double> e0 = inst.op.indicator(0);
    const std::vector<double> e1 = inst.op.indicator(1);
    bool degenerate = false;
    const double top = svd.values.empty() ? 0.0 : svd.values.back();
    for (std::size_t k = 0; k < svd.values.size(); ++k) {
      if (svd.values[k] <= 1e-12 * top) {
        degenerate = true;  // mean structure lost rank
        break;
      }
      std::vector<double> u(n);
      for (std::size_t r = 0; r < n; ++r) u[r] = svd.u(r, k);
      if (std::abs(dot(u, e0)) < 1e-8 && std::abs(dot(u, e1)) < 1e-8) {
        degenerate = true;
        break;
      }
    }
    if (degenerate) continue;
    inst.resamples = attempt;
    return inst;
  }
  throw ConfigError("linear GNN trial: no admissible instance after resampling");
}

ConvergenceTrial run_linear_gnn_trial(const LinearGnnConfig& cfg) {
  const LinearGnnInstance inst = sample_linear_gnn_instance(cfg);
  Matrix z = spmm(inst.op, inst.features);
  if (cfg.shift) {
    shift_apply_inplace(z, inst.op, 0);
    shift_apply_inplace(z, inst.op, 1);
  }
  ConvergenceTrial t =
      run_gradient_descent(z, inst.y, cfg.threshold, cfg.max_iterations, {}, cfg.envelope_slack);
  t.seed = cfg.seed;
  t.shift = cfg.shift;
  t.resamples = inst.resamples;
  return t;
}

}  // namespace fairnorm

#include "fairnorm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairnorm/error.hpp"
#include "fairnorm/fairness.hpp"
#include "fairnorm/rng.hpp"

namespace fairnorm {

NormMode parse_norm_mode(std::string_view s) {
  if (s == "none") return NormMode::none;
  if (s == "single" || s == "graphnorm_single") return NormMode::graphnorm_single;
  if (s == "group" || s == "mnorm_group") return NormMode::mnorm_group;
  throw ConfigError("unknown norm mode '" + std::string(s) + "'");
}

FairnessMode parse_fairness_mode(std::string_view s) {
  if (s == "none") return FairnessMode::none;
  if (s == "fairnorm") return FairnessMode::fairnorm;
  if (s == "covariance" || s == "covariance_baseline") return FairnessMode::covariance_baseline;
  throw ConfigError("unknown fairness mode '" + std::string(s) + "'");
}

std::string_view norm_mode_name(NormMode m) noexcept {
  switch (m) {
    case NormMode::none: return "none";
    case NormMode::graphnorm_single: return "graphnorm_single";
    case NormMode::mnorm_group: return "mnorm_group";
  }
  return "unknown";
}

std::string_view fairness_mode_name(FairnessMode m) noexcept {
  switch (m) {
    case FairnessMode::none: return "none";
    case FairnessMode::fairnorm: return "fairnorm";
    case FairnessMode::covariance_baseline: return "covariance_baseline";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(kappa >= 0.0 && tau >= 0.0 && cov_weight >= 0.0,
          "kappa, tau and cov_weight must be nonnegative");
  require(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  require(weight_decay >= 0.0, "weight_decay must be nonnegative");
  require(epochs >= 0, "epochs must be nonnegative");
  require(hidden_dim >= 1, "hidden_dim must be positive");
  require(norm_eps > 0.0, "norm_eps must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
  double sum = 0.0;
  for (double f : split_fractions) {
    require(f >= 0.0, "split fractions must be nonnegative");
    sum += f;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "split fractions must sum to 1");
  require(fairness_mode != FairnessMode::fairnorm || norm_mode == NormMode::mnorm_group,
          "fairness mode fairnorm requires norm mode mnorm_group");
}

LossWeights LossWeights::from_config(const TrainConfig& cfg) noexcept {
  LossWeights w;
  if (cfg.fairness_mode == FairnessMode::fairnorm) {
    w.kappa = cfg.kappa;
    w.tau = cfg.tau;
  } else if (cfg.fairness_mode == FairnessMode::covariance_baseline) {
    w.cov = cfg.cov_weight;
  }
  return w;
}

void ModelState::zero_grad() noexcept {
  for_each_param([](DenseParam& p, bool) { p.zero_grad(); });
}

std::size_t ModelState::parameter_count() const noexcept {
  std::size_t n = 0;
  const_cast<ModelState*>(this)->for_each_param([&](DenseParam& p, bool) { n += p.value.size(); });
  return n;
}

ModelState init_model(const TrainConfig& cfg, std::size_t n_features) {
  cfg.validate();
  if (n_features == 0) throw ShapeError("init_model: graph has no features");
  ModelState m;
  const std::size_t h = cfg.hidden_dim;
  m.w1 = DenseParam(glorot_init(h, n_features, derive_seed(cfg.seed, 1)));
  m.w2 = DenseParam(glorot_init(h, h, derive_seed(cfg.seed, 2)));
  m.head = DenseParam(glorot_init(1, h, derive_seed(cfg.seed, 3)));
  m.head_bias = DenseParam(Matrix(1, 1));
  if (cfg.norm_mode != NormMode::none) {
    const std::size_t groups = cfg.norm_mode == NormMode::mnorm_group ? 2 : 1;
    for (int k = 0; k < 2; ++k) m.norms.push_back(mnorm_init(h, groups, cfg.norm_eps));
  }
  return m;
}

GraphContext make_context(const Graph& graph, NormMode mode) {
  GraphContext ctx;
  ctx.op = build_gcn_operator(graph);
  ctx.partition = mode == NormMode::graphnorm_single ? single_partition(graph.n_nodes())
                                                      : sensitive_partition(graph.sensitive);
  return ctx;
}

ForwardResult forward_full(const ModelState& model, const Graph& graph, const GraphContext& ctx,
                           const TrainConfig& cfg, ForwardTape* tape) {
  const bool normed = !model.norms.empty();
  if (normed != (cfg.norm_mode != NormMode::none))
    throw ShapeError("forward_full: model normalization layers do not match config");
  if (model.w1.value.cols() != graph.n_features())
    throw ShapeError("forward_full: model expects " + std::to_string(model.w1.value.cols()) +
                     " features, graph has " + std::to_string(graph.n_features()));
  if (ctx.op.n_nodes() != graph.n_nodes()) throw ShapeError("forward_full: context/graph mismatch");

  ForwardResult res;
  const DenseParam* weights[2] = {&model.w1, &model.w2};
  Matrix h = graph.features;
  for (std::size_t k = 0; k < 2; ++k) {
    LayerTape scratch;
    LayerTape& lt = tape ? tape->layers[k] : scratch;
    lt.input = h;
    lt.linear = gcn_layer_forward(*weights[k], h, ctx.op, &lt.gcn);
    if (!normed) {
      lt.activation_input = lt.linear;
      lt.output = activation_forward(cfg.activation, lt.linear);
    } else if (!cfg.norm_after_activation) {
      lt.activation_input = mnorm_forward(model.norms[k], lt.linear, ctx.partition, &lt.norm);
      lt.output = activation_forward(cfg.activation, lt.activation_input);
    } else {
      lt.activation_input = lt.linear;
      const Matrix a = activation_forward(cfg.activation, lt.linear);
      lt.output = mnorm_forward(model.norms[k], a, ctx.partition, &lt.norm);
    }
    if (normed) res.stats.push_back(lt.norm.stats);
    h = lt.output;
  }
  if (tape) tape->valid = true;
  const Matrix logits = linear_forward(model.head, h);
  res.logits.assign(logits.data(), logits.data() + logits.size());
  const double b = model.head_bias.value(0, 0);
  for (double& z : res.logits) z += b;
  return res;
}

namespace {

double clamp_logit(double z) noexcept { return std::clamp(z, -kLogitClamp, kLogitClamp); }

double sigmoid(double z) noexcept { return activate(Activation::sigmoid, z); }

// softplus(z) - y z, stable for either sign of z.
double bce(double z, double y) noexcept {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

std::vector<double> probabilities(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) p[j] = sigmoid(clamp_logit(logits[j]));
  return p;
}

std::size_t train_count(const Graph& graph) {
  const auto& mask = graph.masks.train;
  if (mask.size() != graph.n_nodes()) throw ShapeError("loss: train mask length != node count");
  const auto c = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  if (c == 0) throw ConfigError("loss: train mask is empty");
  return c;
}

bool has_group_norm(const ModelState& model) {
  return !model.norms.empty() && model.norms.front().groups.size() == 2;
}

// Shared by loss_total and loss_and_backward; when `model_grad` is set the regularizer
// gradients are accumulated and the per-layer input gradients returned in `reg_grads`.
LossBreakdown evaluate_loss(const ModelState& model, ModelState* model_grad,
                            const ForwardTape& tape, std::span<const double> logits,
                            const Graph& graph, const GraphContext& ctx,
                            const LossWeights& weights, std::array<Matrix, 2>* reg_grads) {
  if (!tape.valid) throw ShapeError("loss: forward tape missing");
  if (logits.size() != graph.n_nodes()) throw ShapeError("loss: logits length != node count");
  const double count = static_cast<double>(train_count(graph));
  LossBreakdown lb;
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (graph.masks.train[j]) lb.l_c += bce(clamp_logit(logits[j]), graph.labels[j]);
  lb.l_c /= count;

  if (has_group_norm(model)) {
    for (std::size_t k = 0; k < model.norms.size(); ++k) {
      const MNormCache& cache = tape.layers[k].norm;
      if (model_grad) {
        MNormParams& params = model_grad->norms[k];
        Matrix& g = (*reg_grads)[k];
        g = Matrix(cache.input.rows(), cache.input.cols());
        lb.l_mu += loss_mu_backward(params, cache, ctx.partition, weights.kappa, g);
        lb.l_delta += loss_delta_backward(params, cache, ctx.partition, weights.tau, g);
      } else {
        lb.l_mu += loss_mu(model.norms[k], cache.stats);
        lb.l_delta += loss_delta(model.norms[k], cache, ctx.partition);
      }
    }
  }
  if (weights.cov != 0.0)
    lb.l_cov = loss_covariance_baseline(probabilities(logits), graph.sensitive, graph.masks.train);
  lb.total = lb.l_c + weights.kappa * lb.l_mu + weights.tau * lb.l_delta + weights.cov * lb.l_cov;
  return lb;
}

}  // namespace

LossBreakdown loss_total(std::span<const double> logits, const Graph& graph,
                         const ModelState& model, const ForwardTape& tape, const GraphContext& ctx,
                         const LossWeights& weights) {
  return evaluate_loss(model, nullptr, tape, logits, graph, ctx, weights, nullptr);
}

LossBreakdown loss_and_backward(ModelState& model, const ForwardTape& tape,
                                std::span<const double> logits, const Graph& graph,
                                const GraphContext& ctx, const TrainConfig& cfg,
                                const LossWeights& weights) {
  model.zero_grad();
  std::array<Matrix, 2> reg_grads;
  const LossBreakdown lb =
      evaluate_loss(model, &model, tape, logits, graph, ctx, weights, &reg_grads);

  // d total / d logit
  const double count = static_cast<double>(train_count(graph));
  const std::size_t n = logits.size();
  const std::vector<double> p = probabilities(logits);
  std::vector<double> dlogit(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(logits[j]) >= kLogitClamp) continue;  // clamped: flat
    if (graph.masks.train[j]) dlogit[j] += (p[j] - graph.labels[j]) / count;
  }
  if (weights.cov != 0.0) {
    const auto dcov = covariance_baseline_grad(p, graph.sensitive, graph.masks.train);
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(logits[j]) >= kLogitClamp) continue;
      dlogit[j] += weights.cov * dcov[j] * p[j] * (1.0 - p[j]);
    }
  }

  Matrix up(1, n);
  std::copy(dlogit.begin(), dlogit.end(), up.data());
  double bias_grad = 0.0;
  for (double d : dlogit) bias_grad += d;
  model.head_bias.grad(0, 0) += bias_grad;
  Matrix dh = linear_backward(model.head, tape.layers[1].output, up);

  const bool normed = !model.norms.empty();
  DenseParam* weights_k[2] = {&model.w1, &model.w2};
  for (std::size_t kk = 2; kk-- > 0;) {
    const LayerTape& lt = tape.layers[kk];
    Matrix dlin;
    if (!normed) {
      dlin = activation_backward(cfg.activation, lt.activation_input, dh);
    } else if (!cfg.norm_after_activation) {
      Matrix dnorm = activation_backward(cfg.activation, lt.activation_input, dh);
      dlin = mnorm_backward(model.norms[kk], lt.norm, ctx.partition, dnorm);
      if (!reg_grads[kk].empty()) add_scaled(dlin, 1.0, reg_grads[kk]);
    } else {
      Matrix dact = mnorm_backward(model.norms[kk], lt.norm, ctx.partition, dh);
      if (!reg_grads[kk].empty()) add_scaled(dact, 1.0, reg_grads[kk]);
      dlin = activation_backward(cfg.activation, lt.activation_input, dact);
    }
    if (kk == 0) {
      linear_backward(*weights_k[0], lt.gcn.aggregated, dlin);  // input grad unused
    } else {
      dh = gcn_layer_backward(*weights_k[kk], lt.gcn, ctx.op, dlin);
    }
  }
  return lb;
}

AdamOptions AdamOptions::from_config(const TrainConfig& cfg) noexcept {
  return AdamOptions{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay};
}

void adam_update(DenseParam& p, std::int64_t t, const AdamOptions& opts, bool decayed) {
  if (t < 1) throw ConfigError("adam_update: step must be >= 1");
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(t));
  double* v = p.value.data();
  const double* g = p.grad.data();
  double* m1 = p.adam_m.data();
  double* m2 = p.adam_v.data();
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double gi = decayed ? g[i] + opts.weight_decay * v[i] : g[i];
    m1[i] = opts.beta1 * m1[i] + (1.0 - opts.beta1) * gi;
    m2[i] = opts.beta2 * m2[i] + (1.0 - opts.beta2) * gi * gi;
    v[i] -= opts.lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + opts.eps);
  }
}

void adam_step(ModelState& model, const AdamOptions& opts) {
  ++model.step;
  model.for_each_param([&](DenseParam& p, bool decayed) { adam_update(p, model.step, opts, decayed); });
}

}  // namespace fairnorm

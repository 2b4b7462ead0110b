#pragma once

// Central finite-difference check of the full model gradient.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fairnorm/fairness.hpp"
#include "fairnorm/model.hpp"
#include "generators.hpp"

namespace fairnorm::testing {

struct GradCheckInstance {
  Graph graph;
  TrainConfig cfg;
  ModelState model;
  GraphContext ctx;
  LossWeights weights;
  int resamples = 0;
};

struct GradCheckOptions {
  Activation activation = Activation::relu;
  NormMode norm_mode = NormMode::mnorm_group;
  bool norm_after_activation = false;
  LossWeights weights{0.7, 0.3, 2.0};
  std::size_t max_nodes = 30;
  std::size_t max_features = 8;
  std::size_t hidden = 5;
  double kink_margin = 1e-3;  // distance kept from ReLU zeros, max ties, clamps, |cov| = 0
};

inline double loss_at(const GradCheckInstance& inst, const ModelState& model) {
  ForwardTape tape;
  const ForwardResult fr = forward_full(model, inst.graph, inst.ctx, inst.cfg, &tape);
  return loss_total(fr.logits, inst.graph, model, tape, inst.ctx, inst.weights).total;
}

namespace detail {

inline bool near_kink(const GradCheckInstance& inst, const GradCheckOptions& opt) {
  ForwardTape tape;
  const ForwardResult fr = forward_full(inst.model, inst.graph, inst.ctx, inst.cfg, &tape);
  for (double z : fr.logits)
    if (std::abs(z) > kLogitClamp - 1.0) return true;
  if (opt.activation == Activation::relu) {
    for (const auto& lt : tape.layers)
      for (double z : lt.activation_input.values())
        if (std::abs(z) < opt.kink_margin) return true;
  }
  if (!inst.model.norms.empty() && inst.weights.tau != 0.0) {
    for (const auto& lt : tape.layers) {
      const Matrix& r = lt.norm.input;
      for (std::size_t g = 0; g < inst.ctx.partition.n_groups(); ++g) {
        for (std::size_t i = 0; i < r.rows(); ++i) {
          double first = -1, second = -1;
          for (NodeId j : inst.ctx.partition.groups[g]) {
            const double d = std::abs(r(i, static_cast<std::size_t>(j)) - lt.norm.stats.groups[g].mean[i]);
            if (d > first) {
              second = first;
              first = d;
            } else if (d > second) {
              second = d;
            }
          }
          if (first - second < opt.kink_margin) return true;
          // |r - m| itself is a kink at zero
          if (first < opt.kink_margin) return true;
        }
      }
    }
  }
  if (inst.weights.cov != 0.0) {
    std::vector<double> p(fr.logits.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = activate(Activation::sigmoid, fr.logits[j]);
    if (loss_covariance_baseline(p, inst.graph.sensitive, inst.graph.masks.train) < opt.kink_margin)
      return true;
  }
  return false;
}

inline void randomize(ModelState& m, Gen& g) {
  std::normal_distribution<double> w(0.0, 0.6);
  std::uniform_real_distribution<double> alpha(0.2, 1.5), gamma(0.5, 1.5), beta(-0.5, 0.5);
  for (auto* p : {&m.w1, &m.w2, &m.head, &m.head_bias})
    for (double& v : p->value.values()) v = w(g);
  for (auto& n : m.norms)
    for (auto& ga : n.groups) {
      for (double& v : ga.alpha.value.values()) v = alpha(g);
      for (double& v : ga.gamma.value.values()) v = gamma(g);
      for (double& v : ga.beta.value.values()) v = beta(g);
    }
}

}  // namespace detail

/// Draws a random small instance, redrawing until it is clear of every non-smooth point.
inline GradCheckInstance make_gradcheck_instance(std::uint64_t seed, const GradCheckOptions& opt) {
  Gen g(seed);
  for (int attempt = 0;; ++attempt) {
    GradCheckInstance inst;
    const std::size_t n = uniform_size(g, 10, opt.max_nodes);
    const std::size_t f = uniform_size(g, 2, opt.max_features);
    inst.graph = random_graph(g, n, f, 0.25);
    inst.graph.masks.train = random_bits(g, n, 0.7);
    inst.graph.masks.train[0] = 1;
    inst.cfg.hidden_dim = opt.hidden;
    inst.cfg.activation = opt.activation;
    inst.cfg.norm_mode = opt.norm_mode;
    inst.cfg.norm_after_activation = opt.norm_after_activation;
    inst.cfg.fairness_mode =
        opt.norm_mode == NormMode::mnorm_group ? FairnessMode::fairnorm : FairnessMode::none;
    inst.cfg.seed = seed;
    inst.weights = opt.weights;
    if (opt.norm_mode != NormMode::mnorm_group) {
      inst.weights.kappa = 0.0;
      inst.weights.tau = 0.0;
    }
    inst.model = init_model(inst.cfg, f);
    detail::randomize(inst.model, g);
    inst.ctx = make_context(inst.graph, opt.norm_mode);
    inst.resamples = attempt;
    if (!detail::near_kink(inst, opt)) return inst;
  }
}

struct GradCheckResult {
  std::size_t n_checked = 0;
  double max_rel_error = 0.0;
  std::string worst;
};

/// rel = |analytic - numeric| / max(|analytic|, |numeric|, floor)
inline GradCheckResult gradient_check(const GradCheckInstance& inst, double h = 1e-5,
                                      double floor = 1e-6) {
  ModelState analytic = inst.model;
  {
    ForwardTape tape;
    const ForwardResult fr = forward_full(analytic, inst.graph, inst.ctx, inst.cfg, &tape);
    loss_and_backward(analytic, tape, fr.logits, inst.graph, inst.ctx, inst.cfg, inst.weights);
  }
  std::vector<const DenseParam*> grads;
  analytic.for_each_param([&](DenseParam& p, bool) { grads.push_back(&p); });

  GradCheckResult res;
  ModelState probe = inst.model;
  std::vector<DenseParam*> params;
  probe.for_each_param([&](DenseParam& p, bool) { params.push_back(&p); });
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t e = 0; e < params[k]->value.size(); ++e) {
      double& v = params[k]->value.data()[e];
      const double saved = v;
      v = saved + h;
      const double up = loss_at(inst, probe);
      v = saved - h;
      const double down = loss_at(inst, probe);
      v = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[k]->grad.data()[e];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++res.n_checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = "param " + std::to_string(k) + " entry " + std::to_string(e) +
                    " analytic " + std::to_string(a) + " numeric " + std::to_string(numeric);
      }
    }
  }
  return res;
}

}  // namespace fairnorm::testing

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fairnorm/graph.hpp"
#include "fairnorm/layers.hpp"
#include "fairnorm/matrix.hpp"
#include "fairnorm/mnorm.hpp"

namespace fairnorm {

enum class NormMode { none, graphnorm_single, mnorm_group };
enum class FairnessMode { none, fairnorm, covariance_baseline };

/// Accepts the long names and the CLI short forms (single, group, covariance).
NormMode parse_norm_mode(std::string_view s);
FairnessMode parse_fairness_mode(std::string_view s);
std::string_view norm_mode_name(NormMode m) noexcept;
std::string_view fairness_mode_name(FairnessMode m) noexcept;

struct TrainConfig {
  double kappa = 100.0;
  double tau = 1e-7;
  double cov_weight = 1.0;  // weight of |cov(s, p)| in covariance_baseline mode
  double lr = 1e-3;
  double weight_decay = 1e-5;
  int epochs = 1000;
  std::size_t hidden_dim = 64;
  Activation activation = Activation::relu;
  NormMode norm_mode = NormMode::mnorm_group;
  FairnessMode fairness_mode = FairnessMode::fairnorm;
  bool norm_after_activation = false;
  double norm_eps = kDefaultNormEps;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::array<double, 3> split_fractions{0.5, 0.25, 0.25};

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

struct LossWeights {
  double kappa = 0.0;
  double tau = 0.0;
  double cov = 0.0;

  /// The weights that are active under the config's fairness mode.
  static LossWeights from_config(const TrainConfig& cfg) noexcept;
};

struct ModelState {
  DenseParam w1;         // hidden x F
  DenseParam w2;         // hidden x hidden
  DenseParam head;       // 1 x hidden
  DenseParam head_bias;  // 1 x 1
  std::vector<MNormParams> norms;  // one per GCN layer, empty when norm_mode = none
  std::int64_t step = 0;

  void zero_grad() noexcept;
  std::size_t parameter_count() const noexcept;

  /// fn(DenseParam&, bool decayed). Only the three weight matrices are decayed.
  template <class Fn>
  void for_each_param(Fn&& fn) {
    fn(w1, true);
    fn(w2, true);
    fn(head, true);
    fn(head_bias, false);
    for (auto& n : norms) {
      for (auto& g : n.groups) {
        fn(g.alpha, false);
        fn(g.gamma, false);
        fn(g.beta, false);
      }
    }
  }
};

ModelState init_model(const TrainConfig& cfg, std::size_t n_features);

/// Graph-derived quantities reused every epoch.
struct GraphContext {
  AggregationOperator op;
  Partition partition;  // normalization partition; unused when norm_mode = none
};

GraphContext make_context(const Graph& graph, NormMode mode);

struct LayerTape {
  Matrix input;
  GcnCache gcn;
  Matrix linear;      // W H Q
  Matrix activation_input;
  MNormCache norm;
  Matrix output;
};

struct ForwardTape {
  std::array<LayerTape, 2> layers;
  bool valid = false;
};

struct ForwardResult {
  std::vector<double> logits;
  std::vector<MNormStats> stats;  // per normalized layer
};

ForwardResult forward_full(const ModelState& model, const Graph& graph, const GraphContext& ctx,
                           const TrainConfig& cfg, ForwardTape* tape = nullptr);

constexpr double kLogitClamp = 30.0;

struct LossBreakdown {
  double total = 0.0;
  double l_c = 0.0;
  double l_mu = 0.0;     // summed over normalized layers
  double l_delta = 0.0;  // summed over normalized layers
  double l_cov = 0.0;
};

/// Objective value only. The regularizer components are reported whenever the model has
/// two-group normalization layers, whether or not they are weighted in.
LossBreakdown loss_total(std::span<const double> logits, const Graph& graph,
                         const ModelState& model, const ForwardTape& tape, const GraphContext& ctx,
                         const LossWeights& weights);

/// Same value as loss_total; replaces model gradients with the gradient of `total`.
LossBreakdown loss_and_backward(ModelState& model, const ForwardTape& tape,
                                std::span<const double> logits, const Graph& graph,
                                const GraphContext& ctx, const TrainConfig& cfg,
                                const LossWeights& weights);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  static AdamOptions from_config(const TrainConfig& cfg) noexcept;
};

/// One bias-corrected Adam update at step t (t >= 1); when `decayed`, weight_decay * value is
/// added to the gradient first.
void adam_update(DenseParam& p, std::int64_t t, const AdamOptions& opts, bool decayed);
/// Increments the step counter and updates every parameter.
void adam_step(ModelState& model, const AdamOptions& opts);

}  // namespace fairnorm

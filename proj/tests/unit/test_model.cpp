#include <gtest/gtest.h>

#include <cmath>

#include "fairnorm/error.hpp"
#include "fairnorm/model.hpp"
#include "generators.hpp"
#include "gradcheck.hpp"

using namespace fairnorm;
using namespace fairnorm::testing;

namespace {

// Relative-error ceiling for central differences at h = 1e-5 on well-conditioned points.
constexpr double kGradTol = 1e-5;

void expect_gradients(const GradCheckOptions& opt, int n_seeds) {
  for (int seed = 0; seed < n_seeds; ++seed) {
    const auto inst = make_gradcheck_instance(static_cast<std::uint64_t>(seed), opt);
    const auto res = gradient_check(inst);
    EXPECT_GT(res.n_checked, 0u);
    EXPECT_LT(res.max_rel_error, kGradTol) << "seed " << seed << " worst " << res.worst;
  }
}

}  // namespace

TEST(Config, ParseAndValidate) {
  EXPECT_EQ(parse_norm_mode("group"), NormMode::mnorm_group);
  EXPECT_EQ(parse_norm_mode("single"), NormMode::graphnorm_single);
  EXPECT_EQ(parse_fairness_mode("covariance"), FairnessMode::covariance_baseline);
  EXPECT_EQ(parse_norm_mode(norm_mode_name(NormMode::none)), NormMode::none);
  EXPECT_THROW(parse_norm_mode("batch"), ConfigError);

  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.norm_mode = NormMode::graphnorm_single;
  EXPECT_THROW(cfg.validate(), ConfigError);  // fairnorm needs group statistics
  cfg = {};
  cfg.lr = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.hidden_dim = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, ActiveWeightsFollowMode) {
  TrainConfig cfg;
  auto w = LossWeights::from_config(cfg);
  EXPECT_EQ(w.kappa, cfg.kappa);
  EXPECT_EQ(w.cov, 0.0);
  cfg.fairness_mode = FairnessMode::covariance_baseline;
  w = LossWeights::from_config(cfg);
  EXPECT_EQ(w.kappa, 0.0);
  EXPECT_EQ(w.tau, 0.0);
  EXPECT_EQ(w.cov, cfg.cov_weight);
}

TEST(Init, ShapesAndDeterminism) {
  TrainConfig cfg;
  cfg.hidden_dim = 7;
  const ModelState a = init_model(cfg, 5), b = init_model(cfg, 5);
  EXPECT_EQ(a.w1.value.rows(), 7u);
  EXPECT_EQ(a.w1.value.cols(), 5u);
  EXPECT_EQ(a.w2.value.rows(), 7u);
  EXPECT_EQ(a.head.value.cols(), 7u);
  EXPECT_EQ(a.norms.size(), 2u);
  EXPECT_EQ(a.w1.value, b.w1.value);
  EXPECT_EQ(a.parameter_count(), 7u * 5 + 49 + 7 + 1 + 2 * 2 * 3 * 7);
  cfg.norm_mode = NormMode::none;
  cfg.fairness_mode = FairnessMode::none;
  EXPECT_TRUE(init_model(cfg, 5).norms.empty());
  cfg.seed = 1;
  EXPECT_NE(init_model(cfg, 5).w1.value, a.w1.value);
}

TEST(Forward, FailsOnShapeMismatch) {
  Gen g(71);
  const Graph graph = random_graph(g, 10, 4, 0.3);
  TrainConfig cfg;
  cfg.hidden_dim = 3;
  const ModelState m = init_model(cfg, 5);
  const GraphContext ctx = make_context(graph, cfg.norm_mode);
  EXPECT_THROW(forward_full(m, graph, ctx, cfg, nullptr), ShapeError);
}

TEST(Forward, SingleGroupNormsMatchIdentityAtInit) {
  // With alpha = gamma = 1, beta = 0 every normalized row has zero mean.
  Gen g(72);
  const Graph graph = random_graph(g, 12, 3, 0.3);
  TrainConfig cfg;
  cfg.hidden_dim = 4;
  cfg.activation = Activation::identity;
  const ModelState m = init_model(cfg, 3);
  const GraphContext ctx = make_context(graph, cfg.norm_mode);
  ForwardTape tape;
  forward_full(m, graph, ctx, cfg, &tape);
  ASSERT_TRUE(tape.valid);
  const Matrix& out = tape.layers[0].output;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (int k = 0; k < 2; ++k) {
      double s = 0.0;
      for (NodeId j : ctx.partition.groups[k]) s += out(i, static_cast<std::size_t>(j));
      EXPECT_NEAR(s, 0.0, 1e-10);
    }
}

TEST(Loss, ClassificationOnlyAtKnownLogits) {
  Gen g(73);
  Graph graph = random_graph(g, 6, 2, 0.5);
  TrainConfig cfg;
  cfg.norm_mode = NormMode::none;
  cfg.fairness_mode = FairnessMode::none;
  cfg.hidden_dim = 2;
  const ModelState m = init_model(cfg, 2);
  const GraphContext ctx = make_context(graph, cfg.norm_mode);
  ForwardTape tape;
  forward_full(m, graph, ctx, cfg, &tape);
  const std::vector<double> zeros(6, 0.0);
  const auto lb = loss_total(zeros, graph, m, tape, ctx, LossWeights::from_config(cfg));
  EXPECT_NEAR(lb.l_c, std::log(2.0), 1e-15);
  EXPECT_EQ(lb.total, lb.l_c);
}

TEST(Gradients, ReluPreActivationNorm) { expect_gradients({}, 12); }

TEST(Gradients, Sigmoid) {
  GradCheckOptions opt;
  opt.activation = Activation::sigmoid;
  expect_gradients(opt, 8);
}

TEST(Gradients, NormAfterActivation) {
  GradCheckOptions opt;
  opt.norm_after_activation = true;
  expect_gradients(opt, 8);
}

TEST(Gradients, SingleGroupNorm) {
  GradCheckOptions opt;
  opt.norm_mode = NormMode::graphnorm_single;
  opt.weights = {0.0, 0.0, 2.0};
  expect_gradients(opt, 8);
}

TEST(Gradients, NoNorm) {
  GradCheckOptions opt;
  opt.norm_mode = NormMode::none;
  opt.weights = {0.0, 0.0, 2.0};
  expect_gradients(opt, 8);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  DenseParam p(Matrix(1, 3, 1.0));
  p.grad(0, 0) = 5.0;
  p.grad(0, 1) = -0.01;
  AdamOptions o;
  o.lr = 0.1;
  adam_update(p, 1, o, false);
  // Bias-corrected first step is lr * sign(g) for |g| >> eps.
  EXPECT_NEAR(p.value(0, 0), 0.9, 1e-8);
  EXPECT_NEAR(p.value(0, 1), 1.1, 1e-6);
  EXPECT_EQ(p.value(0, 2), 1.0);
}

TEST(Adam, DecayOnlyOnWeights) {
  DenseParam p(Matrix(1, 1, 2.0));
  AdamOptions o;
  o.lr = 0.1;
  o.weight_decay = 0.5;
  DenseParam q = p;
  adam_update(p, 1, o, true);
  adam_update(q, 1, o, false);
  EXPECT_NEAR(p.value(0, 0), 1.9, 1e-8);  // decayed gradient 1.0
  EXPECT_EQ(q.value(0, 0), 2.0);
}

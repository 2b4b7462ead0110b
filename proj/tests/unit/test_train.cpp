#include <gtest/gtest.h>

#include "fairnorm/dataset.hpp"
#include "fairnorm/error.hpp"
#include "fairnorm/train.hpp"
#include "generators.hpp"

using namespace fairnorm;
using namespace fairnorm::testing;

namespace {

Graph small_dataset(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n0 = 60;
  spec.n1 = 40;
  spec.intra_edge_target = 300;
  spec.inter_edge_target = 20;
  spec.f = 10;
  spec.informative = 4;
  spec.seed = seed;
  Graph g = generate_synthetic(spec);
  g.masks = make_splits(g, {0.5, 0.25, 0.25}, seed);
  return g;
}

}  // namespace

TEST(Metrics, FromLogits) {
  Gen g(81);
  Graph graph = random_graph(g, 4, 1, 0.5);
  graph.sensitive = {0, 0, 1, 1};
  graph.labels = {1, 0, 1, 1};
  const std::vector<double> logits = {2.0, -1.0, 0.5, -0.5};
  const std::vector<std::uint8_t> all(4, 1);
  const auto r = metrics_from_logits(logits, graph, all);
  EXPECT_EQ(r.count, 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(*r.dsp, 0.0);
  EXPECT_DOUBLE_EQ(*r.deo, 0.5);
  EXPECT_THROW(metrics_from_logits(logits, graph, std::vector<std::uint8_t>(4, 0)), ConfigError);
}

TEST(Train, DeterministicAndLossDecreases) {
  const Graph graph = small_dataset(3);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.hidden_dim = 16;
  cfg.lr = 1e-2;
  const auto a = train(graph, cfg);
  const auto b = train(graph, cfg);
  ASSERT_EQ(a.series.size(), 60u);
  EXPECT_EQ(a.best_epoch, b.best_epoch);
  EXPECT_EQ(a.model.w1.value, b.model.w1.value);
  EXPECT_EQ(a.series.back().loss.total, b.series.back().loss.total);
  EXPECT_LT(a.series.back().loss.l_c, a.series.front().loss.l_c);
  EXPECT_GE(a.best_epoch, 0);
  // Group means coincide at init (alpha = gamma = 1, beta = 0) and separate once trained.
  EXPECT_EQ(a.series.front().loss.l_mu, 0.0);
  EXPECT_GT(a.series.back().loss.l_mu, 0.0);
}

TEST(Train, BestEpochIsFirstMaximum) {
  const Graph graph = small_dataset(4);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.hidden_dim = 8;
  cfg.lr = 1e-2;
  const auto r = train(graph, cfg);
  double best = -1.0;
  int want = -1;
  for (const auto& e : r.series)
    if (e.val.accuracy > best) {
      best = e.val.accuracy;
      want = e.epoch;
    }
  EXPECT_EQ(r.best_epoch, want);
  EXPECT_EQ(r.val.accuracy, best);
}

TEST(Train, ZeroEpochsKeepsInitialModel) {
  const Graph graph = small_dataset(5);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.hidden_dim = 4;
  const auto r = train(graph, cfg);
  EXPECT_TRUE(r.series.empty());
  EXPECT_EQ(r.model.w1.value, init_model(cfg, graph.features.rows()).w1.value);
}

TEST(Train, AllModesRun) {
  const Graph graph = small_dataset(6);
  for (auto nm : {NormMode::none, NormMode::graphnorm_single, NormMode::mnorm_group})
    for (auto fm : {FairnessMode::none, FairnessMode::covariance_baseline}) {
      TrainConfig cfg;
      cfg.norm_mode = nm;
      cfg.fairness_mode = fm;
      cfg.epochs = 5;
      cfg.hidden_dim = 4;
      const auto r = train(graph, cfg);
      EXPECT_EQ(r.series.size(), 5u);
      EXPECT_EQ(r.series.back().loss.l_mu > 0.0, nm == NormMode::mnorm_group);
    }
}

TEST(Train, RejectsBadMasks) {
  Graph graph = small_dataset(7);
  graph.masks.train.assign(graph.n_nodes(), 0);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(graph, cfg), std::exception);
}

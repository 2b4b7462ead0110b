#include <gtest/gtest.h>

#include "fairnorm/error.hpp"
#include "fairnorm/graph.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace fairnorm;
using namespace fairnorm::testing;

namespace {

Graph tiny_graph() {
  Graph g;
  const std::vector<Edge> e = {{0, 1}, {1, 2}, {2, 3}};
  g.adjacency = Adjacency::from_edges(4, e);
  g.features = Matrix(2, 4, 1.0);
  g.sensitive = {0, 0, 1, 1};
  g.labels = {0, 1, 0, 1};
  return g;
}

}  // namespace

TEST(Adjacency, SymmetrizesDedupesAndDropsSelfLoops) {
  const std::vector<Edge> e = {{0, 1}, {1, 0}, {0, 1}, {2, 2}, {2, 1}};
  const Adjacency a = Adjacency::from_edges(3, e);
  EXPECT_EQ(a.n_edges(), 2u);
  EXPECT_EQ(std::vector<NodeId>(a.neighbors(1).begin(), a.neighbors(1).end()),
            (std::vector<NodeId>{0, 2}));
  EXPECT_EQ(a.degree(2), 1u);
  EXPECT_EQ(a.edge_list(), (std::vector<Edge>{{0, 1}, {1, 2}}));
}

TEST(Adjacency, OutOfRangeIdThrows) {
  const std::vector<Edge> e = {{0, 3}};
  EXPECT_THROW(Adjacency::from_edges(3, e), ShapeError);
}

TEST(Graph, ValidateAcceptsWellFormed) { EXPECT_NO_THROW(tiny_graph().validate()); }

TEST(Graph, ValidateRejectsViolations) {
  Graph g = tiny_graph();
  g.sensitive = {0, 1, 1, 1};
  EXPECT_THROW(g.validate(), DataError);  // group of size 1

  g = tiny_graph();
  g.labels[2] = 2;
  EXPECT_THROW(g.validate(), DataError);

  g = tiny_graph();
  g.features = Matrix(2, 3);
  EXPECT_THROW(g.validate(), DataError);

  g = tiny_graph();
  g.masks.train = {1, 1, 0, 0};
  g.masks.test = {0, 1, 1, 1};
  EXPECT_THROW(g.validate(), DataError);

  g = tiny_graph();
  g.adjacency.col[0] = 0;  // self-loop
  EXPECT_THROW(g.validate(), DataError);
}

TEST(GcnOperator, MatchesDenseOracleAndIsExactlySymmetric) {
  Gen g(11);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = uniform_size(g, 2, 40);
    auto edges = random_edges(g, n, 0.2);
    const auto dup = edges;  // duplicates and reversed copies must not matter
    for (const auto& [u, v] : dup) edges.emplace_back(v, u);
    const auto s = random_partition(g, n, 1);
    const AggregationOperator op = build_gcn_operator(Adjacency::from_edges(n, edges), s);
    const Matrix q = op.q.to_dense();
    EXPECT_LE(max_abs_diff(q, dense_gcn_operator(n, dup)), 1e-15);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(q(i, j), q(j, i));
  }
}

TEST(GcnOperator, IsolatedNodeKeepsItsOwnValue) {
  const AggregationOperator op =
      build_gcn_operator(Adjacency::from_edges(3, std::vector<Edge>{{0, 1}}),
                         std::vector<std::uint8_t>{0, 1, 1});
  Matrix h(1, 3);
  h(0, 2) = 5.0;
  EXPECT_DOUBLE_EQ(spmm(op, h)(0, 2), 5.0);
}

TEST(Spmm, MatchesDenseProduct) {
  Gen g(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = uniform_size(g, 2, 50);
    const std::size_t f = uniform_size(g, 1, 6);
    const auto edges = random_edges(g, n, 0.15);
    const auto s = random_partition(g, n, 1);
    const AggregationOperator op = build_gcn_operator(Adjacency::from_edges(n, edges), s);
    const Matrix h = random_matrix(g, f, n);
    EXPECT_LE(max_abs_diff(spmm(op, h), naive_matmul(h, dense_gcn_operator(n, edges))), 1e-12);
  }
}

TEST(Spmm, ColumnMismatchThrows) {
  const AggregationOperator op = build_gcn_operator(tiny_graph());
  EXPECT_THROW(spmm(op, Matrix(2, 5)), ShapeError);
}

TEST(Shift, MatchesDenseProjector) {
  Gen g(13);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = uniform_size(g, 2, 30);
    const auto s = random_partition(g, n, 1);
    const AggregationOperator op = build_gcn_operator(Adjacency::from_edges(n, {}), s);
    const Matrix h = random_matrix(g, 3, n);
    for (int grp = 0; grp < 2; ++grp) {
      const Matrix ref = naive_matmul(h, dense_shift(s, grp));
      EXPECT_LE(max_abs_diff(shift_apply(h, op, grp), ref), 1e-12);
      EXPECT_LE(max_abs_diff(shift_matrix_dense(op, grp), dense_shift(s, grp)), 1e-15);
    }
  }
}

TEST(Shift, RemovesGroupMeanOnly) {
  Graph g = tiny_graph();
  const AggregationOperator op = build_gcn_operator(g);
  Matrix h(1, 4);
  h(0, 0) = 1;
  h(0, 1) = 3;
  h(0, 2) = 10;
  h(0, 3) = 20;
  const Matrix out = shift_apply(h, op, 0);
  EXPECT_DOUBLE_EQ(out(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(out(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(out(0, 2), 10.0);
  EXPECT_DOUBLE_EQ(out(0, 3), 20.0);
}

TEST(Shift, ErrorsAndCapacity) {
  const AggregationOperator op = build_gcn_operator(tiny_graph());
  EXPECT_THROW(shift_apply(Matrix(1, 4), op, 2), ConfigError);
  EXPECT_THROW(shift_apply(Matrix(1, 3), op, 0), ShapeError);
  EXPECT_THROW(shift_matrix_dense(op, 0, 3), CapacityError);

  const AggregationOperator empty_group =
      build_gcn_operator(Adjacency::from_edges(3, {}), std::vector<std::uint8_t>{0, 0, 0});
  EXPECT_THROW(shift_apply(Matrix(1, 3), empty_group, 1), ConfigError);
}

TEST(GroupMembers, AscendingIds) {
  const std::vector<std::uint8_t> s = {1, 0, 1, 1, 0};
  EXPECT_EQ(group_members(s, 1), (std::vector<NodeId>{0, 2, 3}));
  EXPECT_EQ(group_members(s, 0), (std::vector<NodeId>{1, 4}));
}

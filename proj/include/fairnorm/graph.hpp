#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fairnorm/matrix.hpp"

namespace fairnorm {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected simple graph as symmetric CSR with sorted neighbor lists.
/// Self-loops are never stored; they are injected when building Q.
struct Adjacency {
  std::size_t n_nodes = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<NodeId> col;

  /// Symmetrizes, drops self-loops and duplicates. Throws ShapeError on out-of-range ids.
  static Adjacency from_edges(std::size_t n_nodes, std::span<const Edge> edges);

  std::size_t degree(std::size_t i) const noexcept {
    return static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i]);
  }
  std::span<const NodeId> neighbors(std::size_t i) const noexcept {
    return {col.data() + row_ptr[i], degree(i)};
  }
  /// Number of undirected edges.
  std::size_t n_edges() const noexcept { return col.size() / 2; }
  /// Each undirected edge once, as (u, v) with u < v, in CSR order.
  std::vector<Edge> edge_list() const;

  friend bool operator==(const Adjacency&, const Adjacency&) = default;
};

struct Masks {
  std::vector<std::uint8_t> train, val, test;
  friend bool operator==(const Masks&, const Masks&) = default;
};

struct Graph {
  Adjacency adjacency;
  Matrix features;  // F x N
  std::vector<std::uint8_t> sensitive;
  std::vector<std::uint8_t> labels;
  Masks masks;

  std::size_t n_nodes() const noexcept { return adjacency.n_nodes; }
  std::size_t n_features() const noexcept { return features.rows(); }

  /// Checks every structural invariant; throws DataError naming the first violation.
  void validate() const;

  friend bool operator==(const Graph&, const Graph&) = default;
};

/// Nodes whose binary attribute equals `group`, ascending.
std::vector<NodeId> group_members(std::span<const std::uint8_t> sensitive, int group);

/// Square CSR matrix with values.
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<NodeId> col;
  std::vector<double> val;

  Matrix to_dense() const;
};

/// Q = D^-1/2 (A + I) D^-1/2 together with the binary partition it is paired with.
struct AggregationOperator {
  SparseMatrix q;
  std::vector<std::uint8_t> sensitive;
  std::array<std::vector<NodeId>, 2> members;

  std::size_t n_nodes() const noexcept { return q.n; }
  std::size_t group_size(int g) const noexcept { return members[static_cast<std::size_t>(g)].size(); }
  /// e^(g): 1 on members of group g.
  std::vector<double> indicator(int g) const;
};

AggregationOperator build_gcn_operator(const Graph& graph);
/// Harness entry point: any partition (groups may be empty or singletons).
AggregationOperator build_gcn_operator(const Adjacency& adjacency,
                                       std::span<const std::uint8_t> sensitive);

/// H * Q for an F x N dense H.
Matrix spmm(const SparseMatrix& q, const Matrix& h);
inline Matrix spmm(const AggregationOperator& op, const Matrix& h) { return spmm(op.q, h); }

/// H * N^(g) without forming N^(g): subtracts each row's group-g mean from the group-g columns.
Matrix shift_apply(const Matrix& h, const AggregationOperator& op, int group);
void shift_apply_inplace(Matrix& h, const AggregationOperator& op, int group);

constexpr std::size_t kDenseCap = 512;

/// Explicit N^(g) = I - e e^T / |S^g|. Throws CapacityError above `cap`.
Matrix shift_matrix_dense(const AggregationOperator& op, int group, std::size_t cap = kDenseCap);

}  // namespace fairnorm

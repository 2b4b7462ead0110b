#include "fairnorm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairnorm/error.hpp"
#include "fairnorm/simd/kernels.hpp"

namespace fairnorm {

Adjacency Adjacency::from_edges(std::size_t n_nodes, std::span<const Edge> edges) {
  std::vector<Edge> dir;
  dir.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n_nodes ||
        static_cast<std::size_t>(v) >= n_nodes)
      throw ShapeError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(n_nodes) + " nodes");
    if (u == v) continue;
    dir.emplace_back(u, v);
    dir.emplace_back(v, u);
  }
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  Adjacency a;
  a.n_nodes = n_nodes;
  a.row_ptr.assign(n_nodes + 1, 0);
  a.col.reserve(dir.size());
  for (const auto& [u, v] : dir) {
    ++a.row_ptr[static_cast<std::size_t>(u) + 1];
    a.col.push_back(v);
  }
  for (std::size_t i = 0; i < n_nodes; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
  return a;
}

std::vector<Edge> Adjacency::edge_list() const {
  std::vector<Edge> out;
  out.reserve(n_edges());
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (NodeId j : neighbors(i))
      if (static_cast<std::size_t>(j) > i) out.emplace_back(static_cast<NodeId>(i), j);
  return out;
}

void Graph::validate() const {
  const std::size_t n = n_nodes();
  if (n == 0) throw DataError("graph has no nodes");
  if (adjacency.row_ptr.size() != n + 1) throw DataError("adjacency row pointer size mismatch");
  if (features.cols() != n)
    throw DataError("feature matrix has " + std::to_string(features.cols()) + " columns for " +
                    std::to_string(n) + " nodes");
  if (sensitive.size() != n || labels.size() != n)
    throw DataError("sensitive/label vector length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = adjacency.neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const auto j = static_cast<std::size_t>(nb[k]);
      if (j >= n) throw DataError("neighbor index out of range at node " + std::to_string(i));
      if (j == i) throw DataError("self-loop stored at node " + std::to_string(i));
      if (k > 0 && nb[k - 1] >= nb[k])
        throw DataError("neighbor list of node " + std::to_string(i) + " not strictly sorted");
      auto back = adjacency.neighbors(j);
      if (!std::binary_search(back.begin(), back.end(), static_cast<NodeId>(i)))
        throw DataError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") has no reverse");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (sensitive[i] > 1 || labels[i] > 1)
      throw DataError("non-binary sensitive/label value at node " + std::to_string(i));
  for (int g = 0; g < 2; ++g)
    if (group_members(sensitive, g).size() < 2)
      throw DataError("sensitive group " + std::to_string(g) + " has fewer than 2 nodes");
  const auto check_mask = [&](const std::vector<std::uint8_t>& m, const char* name) {
    if (!m.empty() && m.size() != n) throw DataError(std::string(name) + " mask length mismatch");
  };
  check_mask(masks.train, "train");
  check_mask(masks.val, "val");
  check_mask(masks.test, "test");
  for (std::size_t i = 0; i < n; ++i) {
    int hits = 0;
    for (const auto* m : {&masks.train, &masks.val, &masks.test})
      if (!m->empty() && (*m)[i]) ++hits;
    if (hits > 1) throw DataError("masks overlap at node " + std::to_string(i));
  }
}

std::vector<NodeId> group_members(std::span<const std::uint8_t> sensitive, int group) {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < sensitive.size(); ++i)
    if (sensitive[i] == group) out.push_back(static_cast<NodeId>(i));
  return out;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      d(i, static_cast<std::size_t>(col[static_cast<std::size_t>(k)])) =
          val[static_cast<std::size_t>(k)];
  return d;
}

std::vector<double> AggregationOperator::indicator(int g) const {
  std::vector<double> e(n_nodes(), 0.0);
  for (NodeId j : members[static_cast<std::size_t>(g)]) e[static_cast<std::size_t>(j)] = 1.0;
  return e;
}

AggregationOperator build_gcn_operator(const Graph& graph) {
  return build_gcn_operator(graph.adjacency, graph.sensitive);
}

AggregationOperator build_gcn_operator(const Adjacency& adj,
                                       std::span<const std::uint8_t> sensitive) {
  const std::size_t n = adj.n_nodes;
  if (sensitive.size() != n) throw ShapeError("sensitive vector length does not match node count");

  // d_hat counts the injected self-loop.
  std::vector<double> dhat(n);
  for (std::size_t i = 0; i < n; ++i) dhat[i] = static_cast<double>(adj.degree(i) + 1);

  AggregationOperator op;
  SparseMatrix& q = op.q;
  q.n = n;
  q.row_ptr.assign(n + 1, 0);
  q.col.reserve(adj.col.size() + n);
  q.val.reserve(adj.col.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = false;
    const auto emit = [&](std::size_t j) {
      q.col.push_back(static_cast<NodeId>(j));
      // d_i * d_j is commutative in IEEE arithmetic, so Q is bit-symmetric.
      q.val.push_back(1.0 / std::sqrt(dhat[i] * dhat[j]));
    };
    for (NodeId jn : adj.neighbors(i)) {
      const auto j = static_cast<std::size_t>(jn);
      if (!diag_done && j > i) {
        emit(i);
        diag_done = true;
      }
      emit(j);
    }
    if (!diag_done) emit(i);
    q.row_ptr[i + 1] = static_cast<std::int64_t>(q.col.size());
  }

  op.sensitive.assign(sensitive.begin(), sensitive.end());
  op.members[0] = group_members(sensitive, 0);
  op.members[1] = group_members(sensitive, 1);
  return op;
}

Matrix spmm(const SparseMatrix& q, const Matrix& h) {
  if (h.cols() != q.n)
    throw ShapeError("spmm: H has " + std::to_string(h.cols()) + " columns, Q is " +
                     std::to_string(q.n) + "x" + std::to_string(q.n));
  const auto& k = simd::active();
  Matrix out(h.rows(), h.cols());
  // (HQ)_{f,j} = sum_i H_{f,i} Q_{i,j} = sum_i Q_{j,i} H_{f,i} since Q is symmetric.
  for (std::size_t f = 0; f < h.rows(); ++f) {
    const double* hrow = h.row(f).data();
    double* orow = out.row(f).data();
    for (std::size_t j = 0; j < q.n; ++j) {
      const auto begin = static_cast<std::size_t>(q.row_ptr[j]);
      const auto nnz = static_cast<std::size_t>(q.row_ptr[j + 1]) - begin;
      orow[j] = k.gather_dot(nnz, q.val.data() + begin, q.col.data() + begin, hrow);
    }
  }
  return out;
}

void shift_apply_inplace(Matrix& h, const AggregationOperator& op, int group) {
  if (group != 0 && group != 1) throw ConfigError("shift group must be 0 or 1");
  if (h.cols() != op.n_nodes()) throw ShapeError("shift_apply: column count mismatch");
  const auto& mem = op.members[static_cast<std::size_t>(group)];
  if (mem.empty()) throw ConfigError("shift_apply: group " + std::to_string(group) + " is empty");
  const double inv = 1.0 / static_cast<double>(mem.size());
  for (std::size_t f = 0; f < h.rows(); ++f) {
    auto row = h.row(f);
    double s = 0.0;
    for (NodeId j : mem) s += row[static_cast<std::size_t>(j)];
    const double mean = s * inv;
    for (NodeId j : mem) row[static_cast<std::size_t>(j)] -= mean;
  }
}

Matrix shift_apply(const Matrix& h, const AggregationOperator& op, int group) {
  Matrix out = h;
  shift_apply_inplace(out, op, group);
  return out;
}

Matrix shift_matrix_dense(const AggregationOperator& op, int group, std::size_t cap) {
  if (group != 0 && group != 1) throw ConfigError("shift group must be 0 or 1");
  const std::size_t n = op.n_nodes();
  if (n > cap)
    throw CapacityError("dense shift matrix for " + std::to_string(n) + " nodes exceeds cap " +
                        std::to_string(cap));
  const auto& mem = op.members[static_cast<std::size_t>(group)];
  if (mem.empty()) throw ConfigError("shift_matrix_dense: group is empty");
  Matrix m = Matrix::identity(n);
  const double inv = 1.0 / static_cast<double>(mem.size());
  for (NodeId a : mem)
    for (NodeId b : mem) m(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) -= inv;
  return m;
}

}  // namespace fairnorm

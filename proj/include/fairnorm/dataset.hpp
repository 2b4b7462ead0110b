#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "fairnorm/graph.hpp"

namespace fairnorm {

/// Two-block biased graph: homophilous edges, a group-dependent feature shift and a
/// sensitive-attribute tilt on the labels.
struct SyntheticSpec {
  std::size_t n0 = 485;
  std::size_t n1 = 281;
  std::size_t intra_edge_target = 2834;  // undirected edges
  std::size_t inter_edge_target = 114;
  std::size_t f = 59;
  double feature_shift = 1.0;  // mean offset of group 1 on every feature
  double label_bias = 0.4;     // P(y=1) = sigmoid(signal * u), times (1 - b) in group 0
  std::size_t informative = 8;  // features carrying the latent label signal u
  double label_signal = 3.0;
  double feature_signal = 1.0;  // loading of u on informative features
  double feature_noise = 1.0;
  std::uint64_t seed = 0;

  /// 766 nodes in groups of 485 and 281, 2834 intra and 114 inter edges, 59 features.
  static SyntheticSpec benchmark_default();
  void validate() const;
};

Graph generate_synthetic(const SyntheticSpec& spec);

struct DatasetStats {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::array<std::size_t, 2> group_sizes{};
  std::size_t inter_edges = 0;
  std::size_t intra_edges = 0;
  std::size_t n_features = 0;
  std::array<std::optional<double>, 2> positive_rate{};  // undefined for an empty group
};

DatasetStats compute_stats(const Graph& graph);

nlohmann::ordered_json stats_to_json(const DatasetStats& stats);
nlohmann::ordered_json spec_to_json(const SyntheticSpec& spec);
/// Throws nlohmann::json::exception on missing or mistyped fields.
SyntheticSpec spec_from_json(const nlohmann::ordered_json& j);

/// Disjoint train/val/test masks whose sizes are the largest-remainder rounding of
/// fractions * N. Every split with a nonzero fraction receives at least one node of each
/// (group, label) cell; DataError when that is impossible.
Masks make_splits(const Graph& graph, std::array<double, 3> fractions, std::uint64_t seed);

/// Edge list: two whitespace-separated integer ids per line ('#' comments and blank lines
/// skipped). Feature CSV: header row, first column the node id, the named sensitive and label
/// columns holding 0/1, every other column a feature. Ids are remapped by ascending order.
Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                 const std::string& sensitive_column, const std::string& label_column);

struct DatasetMeta {
  std::string sensitive_column = "sensitive";
  std::string label_column = "label";
  std::string edges_file = "edges.tsv";
  std::string features_file = "features.csv";
  std::optional<SyntheticSpec> generator;
};

/// Writes edges.tsv, features.csv and meta.json into `dir` (created if missing).
void write_dataset(const Graph& graph, const std::filesystem::path& dir, const DatasetMeta& meta);
Graph load_dataset(const std::filesystem::path& dir);
DatasetMeta read_meta(const std::filesystem::path& dir);

}  // namespace fairnorm

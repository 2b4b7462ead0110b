#include "fairnorm/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "fairnorm/error.hpp"
#include "fairnorm/format.hpp"
#include "fairnorm/rng.hpp"

namespace fairnorm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

SyntheticSpec SyntheticSpec::benchmark_default() { return SyntheticSpec{}; }

namespace {

std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

}  // namespace

void SyntheticSpec::validate() const {
  if (n0 < 2 || n1 < 2) throw ConfigError("synthetic spec: each group needs at least 2 nodes");
  if (f == 0) throw ConfigError("synthetic spec: feature count must be positive");
  if (informative > f) throw ConfigError("synthetic spec: informative features exceed f");
  if (!(label_bias >= 0.0 && label_bias <= 1.0))
    throw ConfigError("synthetic spec: label_bias must lie in [0, 1]");
  if (!(feature_noise >= 0.0)) throw ConfigError("synthetic spec: feature_noise must be >= 0");
  if (intra_edge_target > pair_count(n0) + pair_count(n1))
    throw ConfigError("synthetic spec: intra_edge_target exceeds the possible intra-group pairs");
  if (inter_edge_target > n0 * n1)
    throw ConfigError("synthetic spec: inter_edge_target exceeds the possible inter-group pairs");
}

namespace {

/// k distinct indices from [0, m), ascending (Floyd's algorithm).
std::vector<std::uint64_t> sample_indices(std::uint64_t m, std::uint64_t k, Rng& rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2);
  for (std::uint64_t j = m - k; j < m; ++j) {
    std::uniform_int_distribution<std::uint64_t> dist(0, j);
    const std::uint64_t t = dist(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Maps a lexicographic index over pairs (a < b) of `members` to an edge.
void add_intra_edges(const std::vector<NodeId>& members, std::size_t count, Rng& rng,
                     std::vector<Edge>& edges) {
  const std::size_t n = members.size();
  if (count == 0) return;
  std::vector<std::uint64_t> row_start(n, 0);  // index of pair (a, a+1)
  for (std::size_t a = 1; a < n; ++a) row_start[a] = row_start[a - 1] + (n - a);
  for (std::uint64_t idx : sample_indices(pair_count(n), count, rng)) {
    const auto it = std::upper_bound(row_start.begin(), row_start.end(), idx);
    const auto a = static_cast<std::size_t>(it - row_start.begin()) - 1;
    const auto b = a + 1 + static_cast<std::size_t>(idx - row_start[a]);
    edges.emplace_back(members[a], members[b]);
  }
}

}  // namespace

Graph generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n0 + spec.n1;
  Rng rng = make_rng(spec.seed, 0x5359);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Graph g;
  g.sensitive.assign(n, 0);
  std::fill(g.sensitive.begin() + static_cast<std::ptrdiff_t>(spec.n0), g.sensitive.end(), 1);
  std::shuffle(g.sensitive.begin(), g.sensitive.end(), rng);
  const auto m0 = group_members(g.sensitive, 0);
  const auto m1 = group_members(g.sensitive, 1);

  // Intra edges split between the blocks in proportion to their pair counts.
  const double p0 = static_cast<double>(pair_count(spec.n0));
  const double p1 = static_cast<double>(pair_count(spec.n1));
  auto intra0 = static_cast<std::size_t>(
      std::llround(static_cast<double>(spec.intra_edge_target) * p0 / (p0 + p1)));
  intra0 = std::min(intra0, pair_count(spec.n0));
  const std::size_t intra1 = spec.intra_edge_target - intra0;
  if (intra1 > pair_count(spec.n1))
    throw ConfigError("synthetic spec: intra_edge_target cannot be split across the groups");

  std::vector<Edge> edges;
  add_intra_edges(m0, intra0, rng, edges);
  add_intra_edges(m1, intra1, rng, edges);
  for (std::uint64_t idx : sample_indices(spec.n0 * spec.n1, spec.inter_edge_target, rng)) {
    const NodeId a = m0[static_cast<std::size_t>(idx / spec.n1)];
    const NodeId b = m1[static_cast<std::size_t>(idx % spec.n1)];
    edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  g.adjacency = Adjacency::from_edges(n, edges);

  // Latent label signal averaged over each closed neighborhood, so neighbors tend to share labels.
  std::vector<double> raw(n);
  for (double& z : raw) z = normal(rng);
  std::vector<double> latent(n);
  for (std::size_t j = 0; j < n; ++j) {
    double sum = raw[j];
    for (NodeId k : g.adjacency.neighbors(j)) sum += raw[static_cast<std::size_t>(k)];
    latent[j] = sum / std::sqrt(static_cast<double>(g.adjacency.degree(j) + 1));
  }
  g.labels.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double base = 1.0 / (1.0 + std::exp(-spec.label_signal * latent[j]));
    // Group-0 positives are under-reported: kept with probability 1 - label_bias.
    const double p = g.sensitive[j] ? base : (1.0 - spec.label_bias) * base;
    g.labels[j] = unit(rng) < p ? 1 : 0;
  }

  std::vector<double> loading(spec.informative);
  for (double& a : loading) a = spec.feature_signal * (unit(rng) < 0.5 ? -1.0 : 1.0);
  g.features = Matrix(spec.f, n);
  for (std::size_t i = 0; i < spec.f; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double x = spec.feature_noise * normal(rng) + spec.feature_shift * g.sensitive[j];
      if (i < spec.informative) x += loading[i] * latent[j];
      g.features(i, j) = x;
    }
  }
  g.validate();
  return g;
}

DatasetStats compute_stats(const Graph& graph) {
  DatasetStats s;
  s.n_nodes = graph.n_nodes();
  s.n_features = graph.n_features();
  std::array<std::size_t, 2> positives{};
  for (std::size_t j = 0; j < s.n_nodes; ++j) {
    const int grp = graph.sensitive[j] ? 1 : 0;
    ++s.group_sizes[grp];
    positives[grp] += graph.labels[j] ? 1 : 0;
  }
  for (const auto& [u, v] : graph.adjacency.edge_list()) {
    ++s.n_edges;
    if (graph.sensitive[static_cast<std::size_t>(u)] == graph.sensitive[static_cast<std::size_t>(v)])
      ++s.intra_edges;
    else
      ++s.inter_edges;
  }
  for (int grp = 0; grp < 2; ++grp) {
    if (s.group_sizes[grp] > 0)
      s.positive_rate[grp] =
          static_cast<double>(positives[grp]) / static_cast<double>(s.group_sizes[grp]);
  }
  return s;
}

namespace {

/// Largest-remainder apportionment of `total` by `fractions`; ties go to the lower index.
std::array<std::size_t, 3> apportion(std::size_t total, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = fractions[s] * static_cast<double>(total);
    out[s] = static_cast<std::size_t>(std::floor(exact));
    rem[s] = exact - static_cast<double>(out[s]);
    used += out[s];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int k = 0; used < total; k = (k + 1) % 3) {
    if (fractions[order[k]] <= 0.0) continue;
    ++out[order[k]];
    ++used;
  }
  return out;
}

}  // namespace

Masks make_splits(const Graph& graph, std::array<double, 3> fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be nonnegative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const std::size_t n = graph.n_nodes();
  if (graph.sensitive.size() != n || graph.labels.size() != n)
    throw ShapeError("make_splits: attribute length mismatch");

  // Cells indexed by 2 * group + label.
  std::array<std::vector<NodeId>, 4> cells;
  for (std::size_t j = 0; j < n; ++j)
    cells[2 * (graph.sensitive[j] ? 1 : 0) + (graph.labels[j] ? 1 : 0)].push_back(
        static_cast<NodeId>(j));

  const std::array<std::size_t, 3> totals = apportion(n, fractions);

  // quota[c][s]: floors, then hand out leftovers by largest remainder subject to both margins.
  std::array<std::array<std::size_t, 3>, 4> quota{};
  std::array<std::size_t, 4> cell_left{};
  std::array<std::size_t, 3> split_left = totals;
  struct Rem {
    double r;
    int c, s;
  };
  std::vector<Rem> rems;
  for (int c = 0; c < 4; ++c) {
    cell_left[c] = cells[c].size();
    for (int s = 0; s < 3; ++s) {
      const double exact = fractions[s] * static_cast<double>(cells[c].size());
      quota[c][s] = std::min(static_cast<std::size_t>(std::floor(exact)), split_left[s]);
      cell_left[c] -= quota[c][s];
      split_left[s] -= quota[c][s];
      if (fractions[s] > 0.0) rems.push_back({exact - std::floor(exact), c, s});
    }
  }
  std::stable_sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) { return a.r > b.r; });
  for (const Rem& r : rems) {
    if (cell_left[r.c] > 0 && split_left[r.s] > 0) {
      ++quota[r.c][r.s];
      --cell_left[r.c];
      --split_left[r.s];
    }
  }
  for (int c = 0; c < 4; ++c) {
    for (int s = 0; s < 3 && cell_left[c] > 0; ++s) {
      const std::size_t take = std::min(cell_left[c], split_left[s]);
      quota[c][s] += take;
      cell_left[c] -= take;
      split_left[s] -= take;
    }
  }

  // Repair: give every active split one node of every cell by swapping with another split.
  for (int s = 0; s < 3; ++s) {
    if (fractions[s] <= 0.0) continue;
    for (int c = 0; c < 4; ++c) {
      if (quota[c][s] > 0) continue;
      bool fixed = false;
      for (int s2 = 0; s2 < 3 && !fixed; ++s2) {
        if (s2 == s || quota[c][s2] < (fractions[s2] > 0.0 ? 2u : 1u)) continue;
        for (int c2 = 0; c2 < 4 && !fixed; ++c2) {
          if (c2 == c || quota[c2][s] < 2) continue;
          --quota[c][s2];
          ++quota[c][s];
          --quota[c2][s];
          ++quota[c2][s2];
          fixed = true;
        }
      }
      if (!fixed)
        throw DataError("cannot stratify splits: every split needs each (group, label) cell");
    }
  }

  Rng rng = make_rng(seed, 0x5350);
  Masks m;
  m.train.assign(n, 0);
  m.val.assign(n, 0);
  m.test.assign(n, 0);
  std::vector<std::uint8_t>* targets[3] = {&m.train, &m.val, &m.test};
  for (int c = 0; c < 4; ++c) {
    std::vector<NodeId> nodes = cells[c];
    std::shuffle(nodes.begin(), nodes.end(), rng);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < quota[c][s]; ++k) (*targets[s])[static_cast<std::size_t>(nodes[pos++])] = 1;
  }
  return m;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

std::uint8_t parse_binary(std::string_view cell, const std::string& column, std::size_t line) {
  double v = 0.0;
  if (!parse_double(cell, v)) throw DataError("column '" + column + "': not a number", line);
  if (v != 0.0 && v != 1.0)
    throw DataError("column '" + column + "': value '" + std::string(cell) + "' is not 0 or 1",
                    line);
  return v == 1.0 ? 1 : 0;
}

}  // namespace

Graph load_graph(const fs::path& edge_path, const fs::path& feature_path,
                 const std::string& sensitive_column, const std::string& label_column) {
  std::ifstream fin = open_input(feature_path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(fin, line)) throw DataError("feature file is empty", 1);
  const auto header = split_csv(line);
  std::ptrdiff_t s_col = -1, y_col = -1;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] == sensitive_column) s_col = static_cast<std::ptrdiff_t>(c);
    if (header[c] == label_column) y_col = static_cast<std::ptrdiff_t>(c);
  }
  if (s_col < 0) throw DataError("feature header lacks column '" + sensitive_column + "'", 1);
  if (y_col < 0) throw DataError("feature header lacks column '" + label_column + "'", 1);
  if (s_col == y_col) throw DataError("sensitive and label columns coincide", 1);
  const std::size_t f = header.size() - 3;

  struct Row {
    std::vector<double> x;
    std::uint8_t s = 0;
    std::uint8_t y = 0;
  };
  std::map<long long, Row> rows;
  while (std::getline(fin, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(cells.size()),
                      line_no);
    long long id = 0;
    if (!parse_int64(cells[0], id)) throw DataError("node id is not an integer", line_no);
    Row r;
    r.x.reserve(f);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) == s_col) {
        r.s = parse_binary(cells[c], sensitive_column, line_no);
      } else if (static_cast<std::ptrdiff_t>(c) == y_col) {
        r.y = parse_binary(cells[c], label_column, line_no);
      } else {
        double v = 0.0;
        if (!parse_double(cells[c], v))
          throw DataError("column '" + std::string(header[c]) + "': cannot parse '" +
                              std::string(cells[c]) + "'",
                          line_no);
        r.x.push_back(v);
      }
    }
    if (!rows.emplace(id, std::move(r)).second)
      throw DataError("duplicate node id " + std::to_string(id), line_no);
  }
  if (rows.empty()) throw DataError("feature file has no rows");

  const std::size_t n = rows.size();
  std::map<long long, NodeId> index;
  Graph g;
  g.features = Matrix(f, n);
  g.sensitive.resize(n);
  g.labels.resize(n);
  NodeId next = 0;
  for (const auto& [id, r] : rows) {
    index.emplace(id, next);
    const auto j = static_cast<std::size_t>(next);
    for (std::size_t i = 0; i < f; ++i) g.features(i, j) = r.x[i];
    g.sensitive[j] = r.s;
    g.labels[j] = r.y;
    ++next;
  }

  std::ifstream ein = open_input(edge_path);
  std::vector<Edge> edges;
  line_no = 0;
  while (std::getline(ein, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    std::istringstream ls{std::string(v)};
    std::string a, b, extra;
    if (!(ls >> a >> b) || (ls >> extra)) throw DataError("expected two node ids", line_no);
    long long ia = 0, ib = 0;
    if (!parse_int64(a, ia) || !parse_int64(b, ib))
      throw DataError("node id is not an integer", line_no);
    const auto fa = index.find(ia);
    const auto fb = index.find(ib);
    if (fa == index.end() || fb == index.end())
      throw DataError("edge references node " + std::to_string(fa == index.end() ? ia : ib) +
                          " with no feature row",
                      line_no);
    edges.emplace_back(fa->second, fb->second);
  }
  g.adjacency = Adjacency::from_edges(n, edges);
  g.validate();
  return g;
}

json spec_to_json(const SyntheticSpec& s) {
  return json{{"n0", s.n0},
              {"n1", s.n1},
              {"intra_edge_target", s.intra_edge_target},
              {"inter_edge_target", s.inter_edge_target},
              {"f", s.f},
              {"feature_shift", s.feature_shift},
              {"label_bias", s.label_bias},
              {"informative", s.informative},
              {"label_signal", s.label_signal},
              {"feature_signal", s.feature_signal},
              {"feature_noise", s.feature_noise},
              {"seed", s.seed}};
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec s;
  s.n0 = j.at("n0").get<std::size_t>();
  s.n1 = j.at("n1").get<std::size_t>();
  s.intra_edge_target = j.at("intra_edge_target").get<std::size_t>();
  s.inter_edge_target = j.at("inter_edge_target").get<std::size_t>();
  s.f = j.at("f").get<std::size_t>();
  s.feature_shift = j.at("feature_shift").get<double>();
  s.label_bias = j.at("label_bias").get<double>();
  s.informative = j.at("informative").get<std::size_t>();
  s.label_signal = j.at("label_signal").get<double>();
  s.feature_signal = j.at("feature_signal").get<double>();
  s.feature_noise = j.at("feature_noise").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

json stats_to_json(const DatasetStats& st) {
  json rates = json::array();
  for (const auto& r : st.positive_rate) rates.push_back(r ? json(*r) : json(nullptr));
  return json{{"n_nodes", st.n_nodes},
              {"n_edges", st.n_edges},
              {"group_sizes", st.group_sizes},
              {"intra_edges", st.intra_edges},
              {"inter_edges", st.inter_edges},
              {"n_features", st.n_features},
              {"positive_rate", rates}};
}

void write_dataset(const Graph& graph, const fs::path& dir, const DatasetMeta& meta) {
  graph.validate();
  fs::create_directories(dir);
  {
    std::ofstream out(dir / meta.edges_file, std::ios::binary);
    for (const auto& [u, v] : graph.adjacency.edge_list()) out << u << '\t' << v << '\n';
    if (!out) throw DataError("failed writing edges.tsv");
  }
  {
    std::ofstream out(dir / meta.features_file, std::ios::binary);
    out << "id";
    for (std::size_t i = 0; i < graph.n_features(); ++i) out << ",x" << i;
    out << ',' << meta.sensitive_column << ',' << meta.label_column << '\n';
    std::string row;
    for (std::size_t j = 0; j < graph.n_nodes(); ++j) {
      row = std::to_string(j);
      for (std::size_t i = 0; i < graph.n_features(); ++i) {
        row += ',';
        row += format_double(graph.features(i, j));
      }
      row += ',';
      row += std::to_string(graph.sensitive[j]);
      row += ',';
      row += std::to_string(graph.labels[j]);
      row += '\n';
      out << row;
    }
    if (!out) throw DataError("failed writing features.csv");
  }
  json j;
  j["edges"] = meta.edges_file;
  j["features"] = meta.features_file;
  j["sensitive_column"] = meta.sensitive_column;
  j["label_column"] = meta.label_column;
  j["generator"] = meta.generator ? spec_to_json(*meta.generator) : json(nullptr);
  j["stats"] = stats_to_json(compute_stats(graph));
  std::ofstream out(dir / "meta.json", std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing meta.json");
}

DatasetMeta read_meta(const fs::path& dir) {
  std::ifstream in = open_input(dir / "meta.json");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("meta.json: " + std::string(e.what()));
  }
  DatasetMeta m;
  m.sensitive_column = j.value("sensitive_column", std::string("sensitive"));
  m.label_column = j.value("label_column", std::string("label"));
  m.edges_file = j.value("edges", std::string("edges.tsv"));
  m.features_file = j.value("features", std::string("features.csv"));
  if (j.contains("generator") && !j["generator"].is_null()) m.generator = spec_from_json(j["generator"]);
  return m;
}

Graph load_dataset(const fs::path& dir) {
  const DatasetMeta m = read_meta(dir);
  return load_graph(dir / m.edges_file, dir / m.features_file, m.sensitive_column, m.label_column);
}

}  // namespace fairnorm

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "fairnorm/dataset.hpp"
#include "fairnorm/error.hpp"
#include "fairnorm/format.hpp"

using namespace fairnorm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fairnorm_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& body) const {
    std::ofstream(path / name) << body;
    return path / name;
  }
};

}  // namespace

TEST(Format, RoundTripAndStrictParsing) {
  for (double v : {0.0, -1.5, 1e-300, 0.1, 123456789.125}) {
    double back = 0.0;
    ASSERT_TRUE(parse_double(format_double(v), back));
    EXPECT_EQ(back, v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  long long i = 0;
  EXPECT_TRUE(parse_int64(" +42 ", i));
  EXPECT_EQ(i, 42);
  EXPECT_FALSE(parse_int64("4x", i));
  double d = 0.0;
  EXPECT_FALSE(parse_double("", d));
  EXPECT_EQ(trim("  a b \t"), "a b");
}

TEST(Synthetic, DefaultsMatchTargets) {
  const Graph g = generate_synthetic(SyntheticSpec::benchmark_default());
  const auto st = compute_stats(g);
  EXPECT_EQ(st.n_nodes, 766u);
  EXPECT_EQ(st.group_sizes[0], 485u);
  EXPECT_EQ(st.group_sizes[1], 281u);
  EXPECT_EQ(st.intra_edges, 2834u);
  EXPECT_EQ(st.inter_edges, 114u);
  EXPECT_EQ(st.n_edges, 2948u);
  EXPECT_EQ(st.n_features, 59u);
  EXPECT_NO_THROW(g.validate());
  // Group-0 positives are under-reported.
  EXPECT_LT(*st.positive_rate[0], *st.positive_rate[1]);
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticSpec spec;
  spec.n0 = 50;
  spec.n1 = 30;
  spec.intra_edge_target = 200;
  spec.inter_edge_target = 10;
  spec.f = 6;
  spec.informative = 3;
  const Graph a = generate_synthetic(spec), b = generate_synthetic(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.adjacency.edge_list(), b.adjacency.edge_list());
  spec.seed = 1;
  EXPECT_NE(generate_synthetic(spec).features, a.features);
  spec.inter_edge_target = 50 * 30 + 1;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Splits, DisjointCoveringStratifiedDeterministic) {
  const Graph g = generate_synthetic(SyntheticSpec::benchmark_default());
  const Masks m = make_splits(g, {0.5, 0.25, 0.25}, 11);
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t j = 0; j < g.n_nodes(); ++j) {
    ASSERT_EQ(m.train[j] + m.val[j] + m.test[j], 1);
    counts[0] += m.train[j];
    counts[1] += m.val[j];
    counts[2] += m.test[j];
  }
  EXPECT_EQ(counts[0], 383u);
  EXPECT_EQ(counts[0] + counts[1] + counts[2], 766u);
  for (const auto* mask : {&m.train, &m.val, &m.test}) {
    std::set<std::pair<int, int>> cells;
    for (std::size_t j = 0; j < g.n_nodes(); ++j)
      if ((*mask)[j]) cells.insert({g.sensitive[j], g.labels[j]});
    EXPECT_EQ(cells.size(), 4u);
  }
  const Masks again = make_splits(g, {0.5, 0.25, 0.25}, 11);
  EXPECT_EQ(again.train, m.train);
  EXPECT_NE(make_splits(g, {0.5, 0.25, 0.25}, 12).train, m.train);
}

TEST(Splits, InfeasibleStratificationIsDataError) {
  SyntheticSpec spec;
  spec.n0 = 5;
  spec.n1 = 5;
  spec.intra_edge_target = 8;
  spec.inter_edge_target = 2;
  spec.f = 2;
  spec.informative = 1;
  const Graph g = generate_synthetic(spec);
  EXPECT_THROW(make_splits(g, {0.5, 0.25, 0.25}, 0), DataError);
  EXPECT_THROW(make_splits(g, {0.5, 0.5, 0.5}, 0), ConfigError);
}

TEST(Loader, ReadsRemapsAndRoundTrips) {
  TempDir dir;
  const auto edges = dir.write("e.txt", "# comment\n10 20\n20\t30\n\n10 10\n40 10\n");
  const auto feats = dir.write("f.csv",
                               "id,a,b,gender,y\n"
                               "30,1.5,2,1,0\n"
                               "10,0,-1,0,1\n"
                               "40,0,0,0,0\n"
                               "20,3,4,1,1\n");
  const Graph g = load_graph(edges, feats, "gender", "y");
  ASSERT_EQ(g.n_nodes(), 4u);
  EXPECT_EQ(g.features.rows(), 2u);
  EXPECT_EQ(g.adjacency.n_edges(), 3u);  // self loop dropped
  // Nodes are ordered by id: 10, 20, 30, 40.
  EXPECT_EQ(g.sensitive, (std::vector<std::uint8_t>{0, 1, 1, 0}));
  EXPECT_EQ(g.labels, (std::vector<std::uint8_t>{1, 1, 0, 0}));
  EXPECT_EQ(g.features(0, 2), 1.5);

  DatasetMeta meta;
  write_dataset(g, dir.path / "ds", meta);
  const Graph back = load_dataset(dir.path / "ds");
  EXPECT_EQ(back.features, g.features);
  EXPECT_EQ(back.sensitive, g.sensitive);
  EXPECT_EQ(back.labels, g.labels);
  EXPECT_EQ(back.adjacency.edge_list(), g.adjacency.edge_list());
}

TEST(Loader, ErrorsCarryLineNumbers) {
  TempDir dir;
  const auto feats = dir.write("f.csv", "id,a,s,y\n1,0.5,0,1\n2,0.1,1,0\n");
  auto expect_line = [&](const std::string& edges_body, std::size_t line) {
    const auto e = dir.write("e.txt", edges_body);
    try {
      load_graph(e, feats, "s", "y");
      ADD_FAILURE() << "no error for: " << edges_body;
    } catch (const DataError& err) {
      EXPECT_EQ(err.line(), line) << err.what();
    }
  };
  expect_line("1 2\n1 x\n", 2);
  expect_line("1 2\n1 7\n", 2);   // unknown node
  expect_line("1\n", 1);          // missing column

  const auto bad = dir.write("g.csv", "id,a,s,y\n1,0.5,2,1\n");
  const auto e = dir.write("e2.txt", "");
  EXPECT_THROW(load_graph(e, bad, "s", "y"), DataError);  // sensitive must be binary
  EXPECT_THROW(load_graph(e, feats, "missing", "y"), DataError);
  EXPECT_THROW(load_graph(dir.path / "nope", feats, "s", "y"), DataError);
}

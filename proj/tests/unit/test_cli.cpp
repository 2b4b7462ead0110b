#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fairnorm/cli.hpp"

using namespace fairnorm;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Cli {
  fs::path root;
  std::ostringstream out, err;

  Cli() {
    root = fs::temp_directory_path() /
           ("fairnorm_cli_" + std::string(
                                  ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Cli() { fs::remove_all(root); }

  int run(std::vector<std::string> args) {
    out.str("");
    err.str("");
    return run_cli(args, out, err);
  }
  std::string p(const std::string& rel) const { return (root / rel).string(); }

  static std::string slurp(const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  // A small dataset keeps the training commands fast.
  void small_dataset(const std::string& dir) {
    ASSERT_EQ(run({"gen", "--out", p(dir), "--n0", "60", "--n1", "40", "--intra", "300", "--inter",
                   "20", "--features", "8", "--informative", "4"}),
              0)
        << err.str();
  }
};

}  // namespace

TEST(Cli, UsageErrors) {
  Cli c;
  EXPECT_EQ(c.run({}), kExitUsage);
  EXPECT_EQ(c.run({"nope"}), kExitUsage);
  EXPECT_EQ(c.run({"train", "--out", c.p("x")}), kExitUsage);
  EXPECT_EQ(c.run({"verify", "--suite", "bogus", "--out", c.p("v")}), kExitUsage);
  EXPECT_EQ(c.run({"--help"}), kExitOk);
  EXPECT_EQ(c.run({"gen", "--out", c.p("g"), "--n0", "1"}), kExitUsage);
}

TEST(Cli, GenIsByteReproducible) {
  Cli c;
  c.small_dataset("a");
  c.small_dataset("b");
  for (const char* f : {"edges.tsv", "features.csv", "meta.json"})
    EXPECT_EQ(Cli::slurp(c.root / "a" / f), Cli::slurp(c.root / "b" / f)) << f;
  const auto stats = json::parse(c.out.str());
  EXPECT_EQ(stats["n_nodes"], 100);
  EXPECT_EQ(stats["inter_edges"], 20);
}

TEST(Cli, TrainZeroEpochsAndDeterminism) {
  Cli c;
  c.small_dataset("ds");
  ASSERT_EQ(c.run({"train", "--dataset", c.p("ds"), "--out", c.p("t0"), "--seeds", "1", "--epochs",
                   "0"}),
            0)
      << c.err.str();
  const auto agg = json::parse(Cli::slurp(c.root / "t0" / "aggregate.json"));
  EXPECT_EQ(agg["runs"][0]["best_epoch"], -1);
  EXPECT_TRUE(agg["test"]["accuracy"]["std"].is_null());
  // Header only: no epochs ran.
  EXPECT_EQ(Cli::slurp(c.root / "t0" / "epochs_seed0.csv").find('\n') + 1,
            Cli::slurp(c.root / "t0" / "epochs_seed0.csv").size());

  const std::vector<std::string> args = {"train", "--dataset", c.p("ds"), "--out", c.p("t1"),
                                         "--seeds", "2", "--epochs", "5", "--hidden", "8"};
  ASSERT_EQ(c.run(args), 0) << c.err.str();
  const std::string first = Cli::slurp(c.root / "t1" / "aggregate.json");
  const std::string curve = Cli::slurp(c.root / "t1" / "epochs_seed1.csv");
  const std::string man = Cli::slurp(c.root / "t1" / "manifest.json");
  ASSERT_EQ(c.run(args), 0);
  EXPECT_EQ(first, Cli::slurp(c.root / "t1" / "aggregate.json"));
  EXPECT_EQ(curve, Cli::slurp(c.root / "t1" / "epochs_seed1.csv"));
  EXPECT_EQ(man, Cli::slurp(c.root / "t1" / "manifest.json"));

  const auto m = json::parse(man);
  EXPECT_EQ(m["command"], "train");
  EXPECT_EQ(m["seeds"], json::array({0, 1}));
  EXPECT_EQ(m["inputs"]["content_hash"].get<std::string>().size(), 40u);
  EXPECT_EQ(m["outputs"].size(), 4u);
  EXPECT_FALSE(agg["test"]["accuracy"]["mean"].is_null());
}

TEST(Cli, ManifestHashesGitBlobs) {
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  Cli c;
  c.small_dataset("ds");
  ASSERT_EQ(c.run({"train", "--dataset", c.p("ds"), "--out", c.p("t"), "--epochs", "0"}), 0);
  const auto m = json::parse(Cli::slurp(c.root / "t" / "manifest.json"));
  ASSERT_EQ(m["inputs"]["files"].size(), 3u);
  for (const auto& f : m["inputs"]["files"]) EXPECT_EQ(f["sha1"].get<std::string>().size(), 40u);
}

TEST(Cli, MissingDatasetIsDataError) {
  Cli c;
  EXPECT_EQ(c.run({"train", "--dataset", c.p("none"), "--out", c.p("t")}), kExitData);
  fs::create_directories(c.root / "bad");
  std::ofstream(c.root / "bad" / "meta.json") << "{not json";
  EXPECT_EQ(c.run({"train", "--dataset", c.p("bad"), "--out", c.p("t")}), kExitData);
}

TEST(Cli, VerifyWritesReports) {
  Cli c;
  ASSERT_EQ(c.run({"verify", "--suite", "projection", "--trials", "20", "--out", c.p("v")}), 0);
  const auto j = json::parse(Cli::slurp(c.root / "v" / "projection.json"));
  EXPECT_EQ(j["passed"], 20);
  EXPECT_TRUE(j["ok"].get<bool>());
  const std::string csv = Cli::slurp(c.root / "v" / "projection.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
  ASSERT_EQ(c.run({"verify", "--suite", "projection", "--trials", "20", "--out", c.p("w")}), 0);
  EXPECT_EQ(csv, Cli::slurp(c.root / "w" / "projection.csv"));
}

TEST(Cli, CurvesSeriesLengths) {
  Cli c;
  c.small_dataset("ds");
  ASSERT_EQ(c.run({"curves", "--dataset", c.p("ds"), "--out", c.p("c1"), "--epochs", "1",
                   "--hidden", "4", "--config", "solo:norm=none,fairness=none"}),
            0)
      << c.err.str();
  std::string csv = Cli::slurp(c.root / "c1" / "curves.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);

  ASSERT_EQ(c.run({"curves", "--dataset", c.p("ds"), "--out", c.p("c3"), "--epochs", "7",
                   "--hidden", "4"}),
            0);
  csv = Cli::slurp(c.root / "c3" / "curves.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 7);
  const auto s = json::parse(Cli::slurp(c.root / "c3" / "summary.json"));
  EXPECT_TRUE(s.contains("nonorm") && s.contains("graphnorm") && s.contains("fairnorm"));

  EXPECT_EQ(c.run({"curves", "--dataset", c.p("ds"), "--out", c.p("c4"), "--config",
                   "x:frobnicate=1"}),
            kExitUsage);
  EXPECT_EQ(c.run({"curves", "--dataset", c.p("ds"), "--out", c.p("c4"), "--config", "a",
                   "--config", "a"}),
            kExitUsage);
}

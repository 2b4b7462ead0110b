#include "fairnorm/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairnorm/dataset.hpp"
#include "fairnorm/error.hpp"
#include "fairnorm/format.hpp"
#include "fairnorm/parallel.hpp"
#include "fairnorm/suites.hpp"
#include "fairnorm/train.hpp"

namespace fairnorm {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha1_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Per-file blob hashes of the dataset directory's declared files, plus one digest over them.
json hash_inputs(const fs::path& dataset) {
  const DatasetMeta meta = read_meta(dataset);
  json files = json::array();
  std::string listing;
  for (const std::string& name : {std::string("meta.json"), meta.edges_file, meta.features_file}) {
    const std::string h = git_blob_sha1(read_file(dataset / name));
    files.push_back({{"path", (dataset / name).generic_string()}, {"sha1", h}});
    listing += h + "  " + name + "\n";
  }
  return {{"files", files}, {"content_hash", sha1_hex(listing)}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw DataError("failed writing " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const MetricsReport& m) {
  return {{"count", m.count},
          {"accuracy", m.accuracy},
          {"dsp", optional_json(m.dsp)},
          {"deo", optional_json(m.deo)}};
}

/// Mean and sample standard deviation over the defined values; null where undefined.
json mean_std(const std::vector<std::optional<double>>& values) {
  std::vector<double> v;
  for (const auto& x : values)
    if (x) v.push_back(*x);
  json out{{"n", v.size()}, {"mean", nullptr}, {"std", nullptr}};
  if (v.empty()) return out;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  out["mean"] = mean;
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out["std"] = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

json config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"hidden", c.hidden_dim},
          {"activation", activation_name(c.activation)},
          {"norm", norm_mode_name(c.norm_mode)},
          {"fairness", fairness_mode_name(c.fairness_mode)},
          {"norm_after_activation", c.norm_after_activation},
          {"kappa", c.kappa},
          {"tau", c.tau},
          {"cov_weight", c.cov_weight},
          {"norm_eps", c.norm_eps},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"split_fractions", c.split_fractions}};
}

double to_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  if (!parse_double(v, d)) throw ConfigError("config key '" + key + "': not a number: " + v);
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  long long i = 0;
  if (!parse_int64(v, i)) throw ConfigError("config key '" + key + "': not an integer: " + v);
  return i;
}

/// Applies one key=value override using the command-line flag names.
void set_config_key(TrainConfig& c, const std::string& key, const std::string& v) {
  if (key == "epochs") {
    c.epochs = static_cast<int>(to_int(key, v));
  } else if (key == "lr") {
    c.lr = to_double(key, v);
  } else if (key == "weight-decay") {
    c.weight_decay = to_double(key, v);
  } else if (key == "hidden") {
    const long long h = to_int(key, v);
    if (h <= 0) throw ConfigError("config key 'hidden' must be positive");
    c.hidden_dim = static_cast<std::size_t>(h);
  } else if (key == "activation") {
    c.activation = parse_activation(v);
  } else if (key == "norm") {
    c.norm_mode = parse_norm_mode(v);
  } else if (key == "fairness") {
    c.fairness_mode = parse_fairness_mode(v);
  } else if (key == "kappa") {
    c.kappa = to_double(key, v);
  } else if (key == "tau") {
    c.tau = to_double(key, v);
  } else if (key == "cov-weight") {
    c.cov_weight = to_double(key, v);
  } else if (key == "norm-after-activation") {
    c.norm_after_activation = to_int(key, v) != 0;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

struct NamedConfig {
  std::string name;
  TrainConfig cfg;
};

/// NAME:key=val,key=val on top of `base`.
NamedConfig parse_named_config(const std::string& text, const TrainConfig& base) {
  const auto colon = text.find(':');
  NamedConfig nc{text.substr(0, colon), base};
  if (nc.name.empty()) throw ConfigError("config '" + text + "' has no name");
  if (colon == std::string::npos) return nc;
  std::stringstream ss(text.substr(colon + 1));
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("config item '" + item + "' lacks '='");
    set_config_key(nc.cfg, std::string(trim(item.substr(0, eq))),
                   std::string(trim(item.substr(eq + 1))));
  }
  nc.cfg.validate();
  return nc;
}

/// Flags shared by train and curves, stored as text so parsing errors share one path.
struct TrainFlags {
  std::map<std::string, std::string> set;

  void attach(CLI::App* app) {
    for (const char* key : {"epochs", "lr", "weight-decay", "hidden", "activation", "norm",
                            "fairness", "kappa", "tau", "cov-weight"})
      app->add_option_function<std::string>(
          std::string("--") + key, [this, key](const std::string& v) { set[key] = v; },
          std::string("training override: ") + key);
    app->add_flag_function(
        "--norm-after-activation",
        [this](std::int64_t n) { set["norm-after-activation"] = n ? "1" : "0"; },
        "normalize after the nonlinearity");
  }

  TrainConfig resolve() const {
    TrainConfig c;
    for (const auto& [k, v] : set) set_config_key(c, k, v);
    c.validate();
    return c;
  }
};

std::vector<std::uint64_t> seed_list(std::uint64_t first, std::size_t count) {
  if (count == 0) throw ConfigError("--seeds must be at least 1");
  std::vector<std::uint64_t> s(count);
  for (std::size_t i = 0; i < count; ++i) s[i] = first + i;
  return s;
}

json manifest(const std::string& command, const std::vector<std::string>& args, json config,
              const std::vector<std::uint64_t>& seeds, json inputs,
              const std::vector<std::string>& outputs) {
  return {{"command", command}, {"args", args},     {"config", std::move(config)},
          {"seeds", seeds},     {"inputs", std::move(inputs)}, {"outputs", outputs}};
}

Graph with_splits(const Graph& g, const TrainConfig& cfg, std::uint64_t seed) {
  Graph copy = g;
  copy.masks = make_splits(g, cfg.split_fractions, seed);
  return copy;
}

std::string epoch_csv(const TrainResult& r) {
  CsvTable t{{"epoch", "loss_total", "l_c", "l_mu", "l_delta", "l_cov", "train_accuracy",
              "val_accuracy", "val_dsp", "val_deo"},
             {}};
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& e : r.series)
    t.rows.push_back({std::to_string(e.epoch), format_double(e.loss.total),
                      format_double(e.loss.l_c), format_double(e.loss.l_mu),
                      format_double(e.loss.l_delta), format_double(e.loss.l_cov),
                      format_double(e.train_accuracy), format_double(e.val.accuracy),
                      opt(e.val.dsp), opt(e.val.deo)});
  return t.to_string();
}

/// First epoch whose total loss is within `factor` of the run's minimum; -1 for an empty run.
int epochs_to_fraction_of_min(const TrainResult& r, double factor) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& e : r.series) lo = std::min(lo, e.loss.total);
  for (const auto& e : r.series)
    if (e.loss.total <= factor * lo) return e.epoch;
  return -1;
}

struct GenArgs {
  SyntheticSpec spec = SyntheticSpec::benchmark_default();
  std::string out;
};

int cmd_gen(const GenArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  a.spec.validate();
  const fs::path dir(a.out);
  fs::create_directories(dir);
  const std::vector<std::string> outputs{"manifest.json", "edges.tsv", "features.csv",
                                         "meta.json"};
  write_json(dir / "manifest.json",
             manifest("gen", args, spec_to_json(a.spec), {a.spec.seed}, json::object(), outputs));
  const Graph g = generate_synthetic(a.spec);
  DatasetMeta meta;
  meta.generator = a.spec;
  write_dataset(g, dir, meta);
  out << stats_to_json(compute_stats(g)).dump(2) << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  TrainFlags flags;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const TrainConfig cfg = a.flags.resolve();
  const auto seeds = seed_list(a.seed, a.seeds);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<std::string> outputs{"manifest.json", "aggregate.json"};
  for (auto s : seeds) outputs.push_back("epochs_seed" + std::to_string(s) + ".csv");
  write_json(dir / "manifest.json",
             manifest("train", args, config_json(cfg), seeds, hash_inputs(a.dataset), outputs));

  const Graph graph = load_dataset(a.dataset);
  const auto results = parallel_map(seeds.size(), [&](std::size_t i) {
    TrainConfig c = cfg;
    c.seed = seeds[i];
    return train(with_splits(graph, c, seeds[i]), c);
  });

  json runs = json::array();
  std::vector<std::optional<double>> acc, dsp, deo, vacc, vdsp, vdeo;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const TrainResult& r = results[i];
    write_text(dir / ("epochs_seed" + std::to_string(seeds[i]) + ".csv"), epoch_csv(r));
    runs.push_back({{"seed", seeds[i]},
                    {"best_epoch", r.best_epoch},
                    {"val", metrics_json(r.val)},
                    {"test", metrics_json(r.test)}});
    acc.emplace_back(r.test.accuracy);
    dsp.push_back(r.test.dsp);
    deo.push_back(r.test.deo);
    vacc.emplace_back(r.val.accuracy);
    vdsp.push_back(r.val.dsp);
    vdeo.push_back(r.val.deo);
  }
  const json agg{{"config", config_json(cfg)},
                 {"seeds", seeds},
                 {"runs", runs},
                 {"test", {{"accuracy", mean_std(acc)}, {"dsp", mean_std(dsp)}, {"deo", mean_std(deo)}}},
                 {"val", {{"accuracy", mean_std(vacc)}, {"dsp", mean_std(vdsp)}, {"deo", mean_std(vdeo)}}}};
  write_json(dir / "aggregate.json", agg);
  out << agg["test"].dump(2) << '\n';
  return kExitOk;
}

struct VerifyArgs {
  std::string suite;
  std::string out;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

int cmd_verify(const VerifyArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  std::vector<std::string> suites;
  if (a.suite == "all")
    suites = suite_names();
  else
    suites.push_back(a.suite);
  for (const auto& s : suites)
    if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end())
      throw ConfigError("unknown suite '" + s + "'");

  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<std::string> outputs{"manifest.json"};
  for (const auto& s : suites) {
    outputs.push_back(s + ".json");
    outputs.push_back(s + ".csv");
  }
  const json cfg{{"suites", suites}, {"trials", a.trials}};
  write_json(dir / "manifest.json",
             manifest("verify", args, cfg, {a.seed}, json::object(), outputs));

  bool all_ok = true;
  for (const auto& s : suites) {
    SuiteOptions o;
    o.trials = a.trials;
    o.seed = a.seed;
    const SuiteReport rep = run_suite(s, o);
    write_json(dir / (s + ".json"), rep.summary);
    write_text(dir / (s + ".csv"), rep.detail.to_string());
    out << s << ": " << rep.passed << "/" << rep.trials << (rep.ok ? " ok" : " FAILED") << '\n';
    all_ok = all_ok && rep.ok;
  }
  return all_ok ? kExitOk : kExitInvariant;
}

struct CurvesArgs {
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  double factor = 1.05;
  std::vector<std::string> configs;
  TrainFlags flags;
};

int cmd_curves(const CurvesArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const TrainConfig base = a.flags.resolve();
  std::vector<std::string> specs = a.configs;
  if (specs.empty())
    specs = {"nonorm:norm=none,fairness=none", "graphnorm:norm=single,fairness=none",
             "fairnorm:norm=group,fairness=fairnorm"};
  std::vector<NamedConfig> configs;
  for (const auto& s : specs) {
    configs.push_back(parse_named_config(s, base));
    for (std::size_t i = 0; i + 1 < configs.size(); ++i)
      if (configs[i].name == configs.back().name)
        throw ConfigError("duplicate config name '" + configs.back().name + "'");
  }
  if (!(a.factor >= 1.0)) throw ConfigError("--threshold-factor must be >= 1");
  const auto seeds = seed_list(a.seed, a.seeds);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  json cfg_json = json::object();
  for (const auto& c : configs) cfg_json[c.name] = config_json(c.cfg);
  write_json(dir / "manifest.json",
             manifest("curves", args, {{"configs", cfg_json}, {"threshold_factor", a.factor}},
                      seeds, hash_inputs(a.dataset), {"manifest.json", "curves.csv", "summary.json"}));

  const Graph graph = load_dataset(a.dataset);
  const std::size_t runs = configs.size() * seeds.size();
  const auto results = parallel_map(runs, [&](std::size_t k) {
    TrainConfig c = configs[k / seeds.size()].cfg;
    const std::uint64_t s = seeds[k % seeds.size()];
    c.seed = s;
    return train(with_splits(graph, c, s), c);
  });

  CsvTable t{{"config", "seed", "epoch", "loss_total", "l_c", "l_mu", "l_delta", "l_cov",
              "train_accuracy", "val_accuracy"},
             {}};
  json summary = json::object();
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    std::vector<double> hits;
    json per_seed = json::array();
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const TrainResult& r = results[ci * seeds.size() + si];
      for (const auto& e : r.series)
        t.rows.push_back({configs[ci].name, std::to_string(seeds[si]), std::to_string(e.epoch),
                          format_double(e.loss.total), format_double(e.loss.l_c),
                          format_double(e.loss.l_mu), format_double(e.loss.l_delta),
                          format_double(e.loss.l_cov), format_double(e.train_accuracy),
                          format_double(e.val.accuracy)});
      const int hit = epochs_to_fraction_of_min(r, a.factor);
      per_seed.push_back({{"seed", seeds[si]}, {"epochs_to_threshold", hit}});
      if (hit >= 0) hits.push_back(hit);
    }
    summary[configs[ci].name] = {
        {"runs", per_seed},
        {"median_epochs_to_threshold", hits.empty() ? json(nullptr) : json(median(hits))}};
  }
  write_text(dir / "curves.csv", t.to_string());
  write_json(dir / "summary.json", summary);
  out << summary.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

std::string git_blob_sha1(std::string_view content) {
  std::string framed = "blob " + std::to_string(content.size());
  framed.push_back('\0');
  framed += content;
  return sha1_hex(framed);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-wise normalization for fair graph neural networks"};
  app.name("fairnorm");
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic biased two-group graph");
  g->add_option("--out", gen.out, "dataset directory")->required();
  g->add_option("--seed", gen.spec.seed, "generator seed");
  g->add_option("--n0", gen.spec.n0, "nodes in group 0");
  g->add_option("--n1", gen.spec.n1, "nodes in group 1");
  g->add_option("--intra", gen.spec.intra_edge_target, "undirected intra-group edges");
  g->add_option("--inter", gen.spec.inter_edge_target, "undirected inter-group edges");
  g->add_option("--features", gen.spec.f, "feature count");
  g->add_option("--informative", gen.spec.informative, "features carrying label signal");
  g->add_option("--feature-shift", gen.spec.feature_shift, "group-1 feature mean offset");
  g->add_option("--label-bias", gen.spec.label_bias, "fraction of group-0 positives dropped");
  g->add_option("--label-signal", gen.spec.label_signal, "latent-to-label slope");
  g->add_option("--feature-signal", gen.spec.feature_signal, "latent loading on features");
  g->add_option("--feature-noise", gen.spec.feature_noise, "feature noise std");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train over seeded splits and aggregate test metrics");
  t->add_option("--dataset", tr.dataset, "dataset directory")->required();
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--seed", tr.seed, "first seed");
  t->add_option("--seeds", tr.seeds, "number of consecutive seeds");
  tr.flags.attach(t);

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "run a randomized theory check");
  v->add_option("--suite", ver.suite, "interlacing, projection, bound, convergence or all")
      ->required();
  v->add_option("--out", ver.out, "output directory")->required();
  v->add_option("--trials", ver.trials, "trial count (0: suite default)");
  v->add_option("--seed", ver.seed, "base seed");

  CurvesArgs cur;
  auto* c = app.add_subcommand("curves", "training-loss curves for named configurations");
  c->add_option("--dataset", cur.dataset, "dataset directory")->required();
  c->add_option("--out", cur.out, "output directory")->required();
  c->add_option("--seed", cur.seed, "first seed");
  c->add_option("--seeds", cur.seeds, "number of consecutive seeds");
  c->add_option("--config", cur.configs, "NAME:key=val,... (repeatable)");
  c->add_option("--threshold-factor", cur.factor, "loss threshold as a multiple of the minimum");
  cur.flags.attach(c);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen, args, out);
    if (*t) return cmd_train(tr, args, out);
    if (*v) return cmd_verify(ver, args, out);
    return cmd_curves(cur, args, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace fairnorm

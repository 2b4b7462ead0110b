#include "fairnorm/suites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fairnorm/error.hpp"
#include "fairnorm/fairness.hpp"
#include "fairnorm/format.hpp"
#include "fairnorm/graph.hpp"
#include "fairnorm/mnorm.hpp"
#include "fairnorm/parallel.hpp"
#include "fairnorm/rng.hpp"
#include "fairnorm/spectral.hpp"

namespace fairnorm {

namespace {

using Row = std::vector<std::string>;

std::string num(double v) { return format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

std::size_t pick(std::size_t requested, std::size_t fallback) {
  return requested ? requested : fallback;
}

std::size_t thread_count(const SuiteOptions& o) { return o.threads ? o.threads : worker_count(); }

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Binary attribute with both groups non-empty.
std::vector<std::uint8_t> random_sensitive(Rng& rng, std::size_t n) {
  const std::size_t n1 = uniform(rng, 1, n - 1);
  std::vector<std::uint8_t> s(n, 0);
  std::fill(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n1), 1);
  std::shuffle(s.begin(), s.end(), rng);
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SuiteReport finish(std::string name, std::size_t trials, std::vector<bool> pass, CsvTable detail) {
  SuiteReport rep;
  rep.suite = std::move(name);
  rep.trials = trials;
  rep.passed = static_cast<std::size_t>(std::count(pass.begin(), pass.end(), true));
  rep.ok = rep.passed == trials;
  rep.detail = std::move(detail);
  rep.summary["suite"] = rep.suite;
  rep.summary["trials"] = rep.trials;
  rep.summary["passed"] = rep.passed;
  return rep;
}

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

SuiteReport run_interlacing_suite(const SuiteOptions& opts) {
  const std::size_t trials = pick(opts.trials, 1000);
  struct Out {
    Row row;
    bool pass;
    double violation;
  };
  const auto results = parallel_map(
      trials,
      [&](std::size_t t) {
        Rng rng = make_rng(opts.seed, 0x494c0000 + t);
        const std::size_t n = uniform(rng, 6, 60);
        const double p = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
        std::bernoulli_distribution coin(p);
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        const auto s = random_sensitive(rng, n);
        const Matrix q = build_gcn_operator(Adjacency::from_edges(n, edges), s).q.to_dense();
        const SpectrumReport r = verify_interlacing(q, s);
        const auto n1 = static_cast<std::size_t>(std::count(s.begin(), s.end(), 1));
        return Out{{num(t), num(n), num(edges.size()), num(n - n1), num(n1), num(r.lambda.back()),
                    num(r.gamma[0]), num(r.gamma[1]), num(r.tol), num(r.max_violation),
                    flag(r.ok())},
                   r.ok(), r.max_violation};
      },
      thread_count(opts));

  CsvTable detail{{"trial", "n", "edges", "n0", "n1", "sigma_max", "gamma_0", "gamma_1", "tol",
                   "max_violation", "pass"},
                  {}};
  std::vector<bool> pass;
  double worst = 0.0;
  for (const auto& r : results) {
    detail.rows.push_back(r.row);
    pass.push_back(r.pass);
    worst = std::max(worst, r.violation);
  }
  SuiteReport rep = finish("interlacing", trials, std::move(pass), std::move(detail));
  rep.summary["max_violation"] = worst;
  rep.summary["ok"] = rep.ok;
  return rep;
}

SuiteReport run_projection_suite(const SuiteOptions& opts) {
  const std::size_t trials = pick(opts.trials, 500);
  constexpr double kTol = 1e-11;
  struct Out {
    Row row;
    bool pass;
    double worst;
  };
  const auto results = parallel_map(
      trials,
      [&](std::size_t t) {
        Rng rng = make_rng(opts.seed, 0x50520000 + t);
        const std::size_t n = uniform(rng, 2, 128);
        const auto s = random_sensitive(rng, n);
        const ProjectionReport r = verify_projection_algebra(s, kTol);
        const auto n1 = static_cast<std::size_t>(std::count(s.begin(), s.end(), 1));
        const double worst = std::max({r.symmetry_err, r.idempotence_err, r.commutation_err,
                                       r.annihilation_err});
        return Out{{num(t), num(n), num(n - n1), num(n1), num(r.symmetry_err),
                    num(r.idempotence_err), num(r.commutation_err), num(r.annihilation_err),
                    flag(r.ok())},
                   r.ok(), worst};
      },
      thread_count(opts));

  CsvTable detail{{"trial", "n", "n0", "n1", "symmetry_err", "idempotence_err", "commutation_err",
                   "annihilation_err", "pass"},
                  {}};
  std::vector<bool> pass;
  double worst = 0.0;
  for (const auto& r : results) {
    detail.rows.push_back(r.row);
    pass.push_back(r.pass);
    worst = std::max(worst, r.worst);
  }
  SuiteReport rep = finish("projection", trials, std::move(pass), std::move(detail));
  rep.summary["tol"] = kTol;
  rep.summary["max_error"] = worst;
  rep.summary["ok"] = rep.ok;
  return rep;
}

SuiteReport run_bound_suite(const SuiteOptions& opts) {
  const std::size_t trials = pick(opts.trials, 1000);
  constexpr double kSlack = 1e-9;
  const double inf = std::numeric_limits<double>::infinity();
  struct Out {
    std::vector<Row> rows;
    bool pass;
  };
  const auto results = parallel_map(
      trials,
      [&](std::size_t t) {
        Rng rng = make_rng(opts.seed, 0x42440000 + t);
        const std::size_t f = uniform(rng, 1, 16);
        const std::size_t n0 = uniform(rng, 2, 64), n1 = uniform(rng, 2, 64);
        std::vector<std::uint8_t> s(n0 + n1, 0);
        std::fill(s.begin() + static_cast<std::ptrdiff_t>(n0), s.end(), 1);
        std::shuffle(s.begin(), s.end(), rng);

        // Raw representations with group-specific location and spread.
        std::normal_distribution<double> nd(0.0, 1.0);
        std::uniform_real_distribution<double> scale(0.1, 3.0), shift(-2.0, 2.0);
        Matrix r(f, n0 + n1);
        for (std::size_t i = 0; i < f; ++i) {
          const double loc[2] = {shift(rng), shift(rng)}, sc[2] = {scale(rng), scale(rng)};
          for (std::size_t j = 0; j < n0 + n1; ++j) r(i, j) = loc[s[j]] + sc[s[j]] * nd(rng);
        }
        const Partition part = sensitive_partition(s);
        MNormParams params = mnorm_init(f);
        std::uniform_real_distribution<double> alpha(0.0, 1.5), gamma(0.1, 2.0), beta(-1.0, 1.0);
        for (auto& ga : params.groups)
          for (std::size_t i = 0; i < f; ++i) {
            ga.alpha.value(i, 0) = alpha(rng);
            ga.gamma.value(i, 0) = gamma(rng);
            ga.beta.value(i, 0) = beta(rng);
          }
        const Matrix h = mnorm_forward(params, r, part);
        Matrix h0(f, n0), h1(f, n1);
        for (std::size_t i = 0; i < f; ++i) {
          for (std::size_t k = 0; k < n0; ++k)
            h0(i, k) = h(i, static_cast<std::size_t>(part.groups[0][k]));
          for (std::size_t k = 0; k < n1; ++k)
            h1(i, k) = h(i, static_cast<std::size_t>(part.groups[1][k]));
        }
        Out out{{}, true};
        for (Activation act : {Activation::relu, Activation::sigmoid})
          for (double p : {1.0, 2.0, inf}) {
            const GroupGapReport g = check_theorem2_bound(h0, h1, act, p);
            const bool ok = g.holds(kSlack);
            out.pass = out.pass && ok;
            out.rows.push_back({num(t), num(f), num(n0), num(n1),
                                std::string(activation_name(act)), num(p), num(g.mu_gap_p),
                                num(g.bound_rhs), flag(ok)});
          }
        return out;
      },
      thread_count(opts));

  CsvTable detail{{"trial", "f", "n0", "n1", "activation", "p", "lhs", "rhs", "pass"}, {}};
  std::vector<bool> pass;
  for (const auto& r : results) {
    for (const auto& row : r.rows) detail.rows.push_back(row);
    pass.push_back(r.pass);
  }
  SuiteReport rep = finish("bound", trials, std::move(pass), std::move(detail));
  rep.summary["slack"] = kSlack;
  rep.summary["ok"] = rep.ok;
  return rep;
}

SuiteReport run_convergence_suite(const SuiteOptions& opts) {
  const std::size_t trials = pick(opts.trials, 200);
  struct Out {
    Row row;
    double rate_vanilla, rate_shift;
    bool envelopes;
  };
  const auto results = parallel_map(
      trials,
      [&](std::size_t t) {
        LinearGnnConfig cfg;
        cfg.seed = derive_seed(opts.seed, 0x434f0000 + t);
        const ConvergenceTrial a = run_linear_gnn_trial(cfg);
        cfg.shift = true;
        const ConvergenceTrial b = run_linear_gnn_trial(cfg);
        const bool env = a.envelope_ok && b.envelope_ok;
        return Out{{num(t), num(a.rate), num(b.rate), std::to_string(a.epochs_to_threshold),
                    std::to_string(b.epochs_to_threshold), flag(a.envelope_ok),
                    flag(b.envelope_ok), std::to_string(a.resamples), flag(b.rate <= a.rate)},
                   a.rate, b.rate, env};
      },
      thread_count(opts));

  CsvTable detail{{"trial", "rate_vanilla", "rate_shift", "epochs_vanilla", "epochs_shift",
                   "envelope_vanilla", "envelope_shift", "resamples", "dominates"},
                  {}};
  std::vector<bool> pass;
  std::vector<double> diff;
  std::size_t dominated = 0, envelopes = 0;
  for (const auto& r : results) {
    detail.rows.push_back(r.row);
    dominated += r.rate_shift <= r.rate_vanilla;
    envelopes += r.envelopes;
    diff.push_back(r.rate_shift - r.rate_vanilla);
    pass.push_back(r.rate_shift <= r.rate_vanilla && r.envelopes);
  }
  SuiteReport rep = finish("convergence", trials, std::move(pass), std::move(detail));
  const double frac = trials ? static_cast<double>(dominated) / static_cast<double>(trials) : 0.0;
  const double med = median(diff);
  rep.ok = trials > 0 && frac > 0.95 && med <= 0.0 && envelopes == trials;
  rep.summary["dominance_fraction"] = frac;
  rep.summary["median_rate_difference"] = med;
  rep.summary["envelopes_ok"] = envelopes;
  rep.summary["ok"] = rep.ok;
  return rep;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"interlacing", "projection", "bound", "convergence"};
  return names;
}

SuiteReport run_suite(std::string_view name, const SuiteOptions& opts) {
  if (name == "interlacing") return run_interlacing_suite(opts);
  if (name == "projection") return run_projection_suite(opts);
  if (name == "bound") return run_bound_suite(opts);
  if (name == "convergence") return run_convergence_suite(opts);
  throw ConfigError("unknown suite '" + std::string(name) + "'");
}

}  // namespace fairnorm

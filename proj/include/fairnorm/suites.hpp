#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fairnorm {

/// Plain CSV table; cells are written verbatim (callers only emit numbers and identifiers).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
};

struct SuiteOptions {
  std::size_t trials = 0;  // 0 selects the suite's default count
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 uses worker_count()
};

struct SuiteReport {
  std::string suite;
  std::size_t trials = 0;
  std::size_t passed = 0;
  bool ok = false;
  nlohmann::ordered_json summary;
  CsvTable detail;
};

/// Random (graph, partition) pairs, N in [6, 60]: singular values of Q and Q N0 N1 interlace.
SuiteReport run_interlacing_suite(const SuiteOptions& opts);
/// Random partitions, N in [2, 128]: shift projectors are symmetric, idempotent, commuting
/// and annihilate both group indicators within 1e-11.
SuiteReport run_projection_suite(const SuiteOptions& opts);
/// Random normalized representations (F <= 16, groups <= 64 nodes), ReLU and sigmoid,
/// p in {1, 2, inf}: activated group-mean gap stays under the deviation bound + 1e-9.
SuiteReport run_bound_suite(const SuiteOptions& opts);
/// Paired linear-GNN gradient descent (N = 80, F = 8): the shifted problem's rate is no worse
/// in more than 95% of pairs and in the median, and every residual obeys its envelope.
SuiteReport run_convergence_suite(const SuiteOptions& opts);

/// Dispatch by name: interlacing, projection, bound, convergence. Throws ConfigError.
SuiteReport run_suite(std::string_view name, const SuiteOptions& opts);
const std::vector<std::string>& suite_names();

}  // namespace fairnorm

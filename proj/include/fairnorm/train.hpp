#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fairnorm/graph.hpp"
#include "fairnorm/model.hpp"

namespace fairnorm {

struct MetricsReport {
  std::size_t count = 0;
  double accuracy = 0.0;
  std::optional<double> dsp;  // undefined when a group is absent from the mask
  std::optional<double> deo;  // undefined when a group has no positive label in the mask
};

/// Hard predictions at probability 0.5. Throws ConfigError on an empty mask.
MetricsReport metrics_from_logits(std::span<const double> logits, const Graph& graph,
                                  std::span<const std::uint8_t> mask);

MetricsReport evaluate(const ModelState& model, const Graph& graph, const GraphContext& ctx,
                       const TrainConfig& cfg, std::span<const std::uint8_t> mask);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;
  double train_accuracy = 0.0;
  MetricsReport val;
};

struct TrainResult {
  ModelState model;     // parameters at best_epoch (the initial model when no epoch ran)
  int best_epoch = -1;
  std::vector<EpochRecord> series;
  MetricsReport val;
  MetricsReport test;
};

/// Full-batch training on the graph's masks. Entry e of the series describes the parameters
/// before the e-th update; the kept model is the first entry with the highest validation accuracy.
TrainResult train(const Graph& graph, const TrainConfig& cfg);

}  // namespace fairnorm

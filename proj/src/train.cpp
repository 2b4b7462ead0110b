#include "fairnorm/train.hpp"

#include "fairnorm/error.hpp"
#include "fairnorm/fairness.hpp"

namespace fairnorm {

MetricsReport metrics_from_logits(std::span<const double> logits, const Graph& graph,
                                  std::span<const std::uint8_t> mask) {
  if (logits.size() != graph.n_nodes() || mask.size() != graph.n_nodes())
    throw ShapeError("metrics: length mismatch");
  const std::vector<std::uint8_t> pred = hard_predictions(logits);
  MetricsReport r;
  std::size_t correct = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    if (!mask[j]) continue;
    ++r.count;
    correct += pred[j] == graph.labels[j] ? 1 : 0;
  }
  if (r.count == 0) throw ConfigError("metrics: mask is empty");
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);
  r.dsp = metric_statistical_parity(pred, graph.sensitive, mask);
  r.deo = metric_equal_opportunity(pred, graph.labels, graph.sensitive, mask);
  return r;
}

MetricsReport evaluate(const ModelState& model, const Graph& graph, const GraphContext& ctx,
                       const TrainConfig& cfg, std::span<const std::uint8_t> mask) {
  const ForwardResult fr = forward_full(model, graph, ctx, cfg);
  return metrics_from_logits(fr.logits, graph, mask);
}

TrainResult train(const Graph& graph, const TrainConfig& cfg) {
  cfg.validate();
  graph.validate();
  const GraphContext ctx = make_context(graph, cfg.norm_mode);
  const LossWeights weights = LossWeights::from_config(cfg);
  const AdamOptions adam = AdamOptions::from_config(cfg);

  TrainResult res;
  ModelState model = init_model(cfg, graph.n_features());
  res.model = model;
  double best_val = -1.0;
  ForwardTape tape;
  for (int e = 0; e < cfg.epochs; ++e) {
    const ForwardResult fr = forward_full(model, graph, ctx, cfg, &tape);
    EpochRecord rec;
    rec.epoch = e;
    rec.loss = loss_and_backward(model, tape, fr.logits, graph, ctx, cfg, weights);
    rec.train_accuracy = metrics_from_logits(fr.logits, graph, graph.masks.train).accuracy;
    rec.val = metrics_from_logits(fr.logits, graph, graph.masks.val);
    if (rec.val.accuracy > best_val) {
      best_val = rec.val.accuracy;
      res.best_epoch = e;
      res.model = model;
    }
    res.series.push_back(rec);
    adam_step(model, adam);
  }
  res.val = evaluate(res.model, graph, ctx, cfg, graph.masks.val);
  res.test = evaluate(res.model, graph, ctx, cfg, graph.masks.test);
  return res;
}

}  // namespace fairnorm

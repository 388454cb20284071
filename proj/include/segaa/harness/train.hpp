#pragma once

#include <algorithm>
#include <cmath>
#include <ctime>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "segaa/data/split.hpp"
#include "segaa/harness/metrics.hpp"
#include "segaa/models/architectures.hpp"
#include "segaa/nn/loss.hpp"
#include "segaa/nn/network.hpp"
#include "segaa/optim/callbacks.hpp"
#include "segaa/optim/optimizers.hpp"

namespace segaa::harness {

using data::Target;
using models::TrainSchedule;

/// Model-ready rows: standardized features, optionally followed by the
/// one-hot of upstream labels (cascade stages), plus the ground truth.
struct Dataset {
  std::size_t width = 0;
  std::vector<float> x;
  std::vector<data::Labels> y;
  std::size_t rows() const { return y.size(); }
};

/// `upstream_classes[u][i]` overrides the one-hot for upstream target u and
/// row i; when absent the ground-truth label is used (teacher forcing).
inline Dataset make_dataset(const std::vector<data::LabeledExample>& examples, const data::Standardizer& s,
                            const std::vector<Target>& upstream = {},
                            const std::vector<std::vector<int>>* upstream_classes = nullptr) {
  if (upstream_classes && upstream_classes->size() != upstream.size()) {
    throw UsageError("one prediction list per upstream target required");
  }
  Dataset d;
  d.width = dsp::kFeatureDim;
  for (Target t : upstream) d.width += data::cardinality(t);
  d.x.reserve(examples.size() * d.width);
  d.y.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto z = s.apply(examples[i].features);
    for (double v : z) d.x.push_back(static_cast<float>(v));
    for (std::size_t u = 0; u < upstream.size(); ++u) {
      const int cls = upstream_classes ? (*upstream_classes)[u].at(i) : examples[i].labels.get(upstream[u]);
      const auto oh = data::one_hot<float>(cls, data::cardinality(upstream[u]));
      d.x.insert(d.x.end(), oh.begin(), oh.end());
    }
    d.y.push_back(examples[i].labels);
  }
  return d;
}

inline std::vector<Target> head_targets(const nn::NetworkSpec& spec) {
  std::vector<Target> out;
  for (const auto& h : spec.heads) out.push_back(data::parse_target(h.name));
  return out;
}

/// Per-head class decision: argmax, or p >= 0.5 for a one-unit sigmoid head.
inline std::vector<int> decide(const nn::Tensor<float>& probs, nn::Activation a) {
  const std::size_t batch = probs.dim(0), units = probs.size() / std::max<std::size_t>(batch, 1);
  std::vector<int> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const float* row = probs.data.data() + i * units;
    if (a == nn::Activation::Sigmoid) {
      out[i] = row[0] >= 0.5f ? 1 : 0;
    } else {
      out[i] = static_cast<int>(std::max_element(row, row + units) - row);
    }
  }
  return out;
}

/// Inference-mode head probabilities for every row, per head (rows x units).
inline std::vector<nn::Tensor<float>> infer(nn::Network<float>& net, const Dataset& d, std::size_t chunk = 256) {
  std::vector<nn::Tensor<float>> out;
  for (const auto& h : net.spec().heads) out.emplace_back(nn::Shape{d.rows(), h.units});
  for (std::size_t start = 0; start < d.rows(); start += chunk) {
    const std::size_t n = std::min(chunk, d.rows() - start);
    nn::Tensor<float> xb({n, d.width},
                         std::vector<float>(d.x.begin() + static_cast<std::ptrdiff_t>(start * d.width),
                                            d.x.begin() + static_cast<std::ptrdiff_t>((start + n) * d.width)));
    const auto& probs = net.forward(xb, nn::Mode::Infer);
    for (std::size_t h = 0; h < probs.size(); ++h) {
      std::copy(probs[h].data.begin(), probs[h].data.end(),
                out[h].data.begin() + static_cast<std::ptrdiff_t>(start * net.spec().heads[h].units));
    }
  }
  return out;
}

/// Class decisions per head.
inline std::vector<std::vector<int>> predict(nn::Network<float>& net, const Dataset& d) {
  const auto probs = infer(net, d);
  std::vector<std::vector<int>> out;
  for (std::size_t h = 0; h < probs.size(); ++h) out.push_back(decide(probs[h], net.spec().heads[h].activation));
  return out;
}

inline std::vector<int> truth(const Dataset& d, Target t) {
  std::vector<int> out;
  out.reserve(d.rows());
  for (const auto& l : d.y) out.push_back(l.get(t));
  return out;
}

/// Metrics for every head of `net` on `d`.
inline std::vector<TargetMetrics> evaluate(nn::Network<float>& net, const Dataset& d) {
  if (d.rows() == 0) throw DataError("cannot evaluate on an empty set");
  const auto pred = predict(net, d);
  const auto targets = head_targets(net.spec());
  std::vector<TargetMetrics> out;
  for (std::size_t h = 0; h < targets.size(); ++h) out.push_back(compute_metrics(targets[h], truth(d, targets[h]), pred[h]));
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0;        // mean over batches of the summed head losses
  std::vector<double> head_loss;
  std::vector<double> val_accuracy;  // per head
  double monitor = 0;                // mean of val_accuracy
  double learning_rate = 0;
  bool operator==(const EpochRecord&) const = default;
};

struct History {
  std::vector<Target> targets;
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
  std::size_t best_epoch = 0;  // 0 when no callback tracked it
  double train_seconds = 0;    // thread CPU time of the epoch loop
  bool operator==(const History& o) const {
    return targets == o.targets && epochs == o.epochs && stopped_early == o.stopped_early && best_epoch == o.best_epoch;
  }
};

namespace detail {

inline double thread_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

inline bool has_batchnorm(const nn::NetworkSpec& s) {
  return std::any_of(s.trunk.begin(), s.trunk.end(),
                     [](const nn::LayerSpec& l) { return l.kind == nn::LayerKind::BatchNorm; });
}

inline optim::Optimizer<float> make_optimizer(const TrainSchedule& s, std::vector<nn::Param<float>*> params) {
  switch (s.optimizer) {
    case optim::OptimizerKind::Sgd: return optim::Optimizer<float>::sgd(s.sgd, std::move(params));
    case optim::OptimizerKind::Adam: return optim::Optimizer<float>::adam(s.adam, std::move(params));
    case optim::OptimizerKind::Nadam: return optim::Optimizer<float>::nadam(s.adam, std::move(params));
  }
  throw UsageError("unknown optimizer");
}

/// Batch boundaries over n rows. A trailing batch of one row is folded into
/// the previous batch when the network normalizes over the batch.
inline std::vector<std::size_t> batch_starts(std::size_t n, std::size_t batch, bool fold_singleton) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < n; s += batch) starts.push_back(s);
  if (fold_singleton && starts.size() > 1 && n - starts.back() == 1) starts.pop_back();
  starts.push_back(n);
  return starts;
}

}  // namespace detail

/// Mini-batch training with a seeded per-epoch shuffle. Validation metrics are
/// recorded each epoch; early stopping and plateau reduction follow the
/// schedule and monitor the mean head validation accuracy.
inline History train(nn::Network<float>& net, const Dataset& train_set, const Dataset& val_set,
                     const TrainSchedule& schedule, std::uint64_t seed) {
  const auto& spec = net.spec();
  const std::size_t in_width = nn::numel(spec.input);
  if (train_set.width != in_width || (val_set.rows() > 0 && val_set.width != in_width)) {
    throw UsageError("dataset width " + std::to_string(train_set.width) + " does not match network input " +
                     std::to_string(in_width));
  }
  if (schedule.batch_size == 0) throw UsageError("batch size must be positive");
  History hist;
  hist.targets = head_targets(spec);
  if (schedule.epochs == 0) return hist;
  if (train_set.rows() == 0) throw DataError("training set is empty");
  if ((schedule.early_stopping || schedule.plateau) && val_set.rows() == 0) {
    throw DataError("validation set is empty but the schedule monitors it");
  }

  auto opt = detail::make_optimizer(schedule, net.params());
  std::optional<optim::EarlyStop> stopper;
  std::optional<optim::PlateauLr> plateau;
  if (schedule.early_stopping) stopper.emplace(schedule.early_stop_patience, true);
  if (schedule.plateau) plateau.emplace(schedule.plateau_patience, schedule.plateau_factor, schedule.min_lr);
  nn::Network<float>::Snapshot best;

  const std::size_t n = train_set.rows(), heads = spec.heads.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5348));
  const auto starts = detail::batch_starts(n, schedule.batch_size, detail::has_batchnorm(spec));

  const double t0 = detail::thread_seconds();
  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = opt.learning_rate();
    rec.head_loss.assign(heads, 0.0);
    for (std::size_t b = 0; b + 1 < starts.size(); ++b) {
      const std::size_t lo = starts[b], bs = starts[b + 1] - lo;
      nn::Tensor<float> xb({bs, in_width});
      std::vector<nn::Tensor<float>> targets;
      for (const auto& h : spec.heads) targets.emplace_back(nn::Shape{bs, h.units});
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t r = order[lo + i];
        std::copy_n(train_set.x.begin() + static_cast<std::ptrdiff_t>(r * in_width), in_width,
                    xb.data.begin() + static_cast<std::ptrdiff_t>(i * in_width));
        for (std::size_t h = 0; h < heads; ++h) {
          const int cls = train_set.y[r].get(hist.targets[h]);
          if (spec.heads[h].activation == nn::Activation::Sigmoid) {
            targets[h].data[i] = static_cast<float>(cls);
          } else {
            targets[h].data[i * spec.heads[h].units + static_cast<std::size_t>(cls)] = 1.0f;
          }
        }
      }
      const auto& probs = net.forward(xb, nn::Mode::Train);
      double batch_loss = 0;
      std::vector<nn::Tensor<float>> grads;
      for (std::size_t h = 0; h < heads; ++h) {
        const double l = spec.heads[h].activation == nn::Activation::Sigmoid ? nn::binary_ce(probs[h], targets[h])
                                                                             : nn::categorical_ce(probs[h], targets[h]);
        rec.head_loss[h] += l;
        batch_loss += l;
        grads.push_back(nn::fused_logit_grad(probs[h], targets[h]));
      }
      if (!std::isfinite(batch_loss)) {
        const std::string layer = net.first_nonfinite_layer(xb).value_or("loss");
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) +
                           ", layer " + layer);
      }
      rec.loss += batch_loss;
      net.backward(grads);
      opt.step();
    }
    const double nb = static_cast<double>(starts.size() - 1);
    rec.loss /= nb;
    for (double& l : rec.head_loss) l /= nb;

    if (val_set.rows() > 0) {
      const auto pred = predict(net, val_set);
      for (std::size_t h = 0; h < heads; ++h) {
        const auto t = truth(val_set, hist.targets[h]);
        std::size_t hit = 0;
        for (std::size_t i = 0; i < t.size(); ++i) hit += t[i] == pred[h][i];
        rec.val_accuracy.push_back(static_cast<double>(hit) / static_cast<double>(t.size()));
      }
      rec.monitor = std::accumulate(rec.val_accuracy.begin(), rec.val_accuracy.end(), 0.0) / static_cast<double>(heads);
    }
    hist.epochs.push_back(rec);

    if (plateau) opt.set_learning_rate(plateau->update(rec.monitor, opt.learning_rate()));
    if (stopper) {
      const auto decision = stopper->update(rec.monitor);
      if (stopper->improved()) best = net.snapshot();
      hist.best_epoch = stopper->best_epoch();
      if (decision == optim::StopDecision::Stop) {
        hist.stopped_early = true;
        net.restore(best);
        break;
      }
    }
  }
  hist.train_seconds = detail::thread_seconds() - t0;
  return hist;
}

}  // namespace segaa::harness

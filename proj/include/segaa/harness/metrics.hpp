#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "segaa/common.hpp"
#include "segaa/data/labels.hpp"

namespace segaa::harness {

/// Rows are true classes, columns predicted, both in canonical class order.
struct Confusion {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // classes * classes

  explicit Confusion(std::size_t k = 0) : classes(k), counts(k * k, 0) {}
  std::size_t& at(std::size_t t, std::size_t p) { return counts[t * classes + p]; }
  std::size_t at(std::size_t t, std::size_t p) const { return counts[t * classes + p]; }
  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
  std::size_t trace() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < classes; ++i) n += at(i, i);
    return n;
  }
  std::size_t row_sum(std::size_t t) const {
    std::size_t n = 0;
    for (std::size_t p = 0; p < classes; ++p) n += at(t, p);
    return n;
  }
  std::size_t col_sum(std::size_t p) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < classes; ++t) n += at(t, p);
    return n;
  }
  bool operator==(const Confusion&) const = default;
};

struct TargetMetrics {
  data::Target target = data::Target::Emotion;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;  // precision/recall/F1 support-weighted
  Confusion confusion;
  bool operator==(const TargetMetrics&) const = default;
};

inline Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred, std::size_t classes) {
  if (truth.size() != pred.size()) throw UsageError("truth and prediction lists differ in length");
  Confusion c(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || pred[i] < 0 || static_cast<std::size_t>(truth[i]) >= classes ||
        static_cast<std::size_t>(pred[i]) >= classes) {
      throw UsageError("class index out of range in metric input");
    }
    ++c.at(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i]));
  }
  return c;
}

/// Weighted precision/recall/F1: per-class scores weighted by true support;
/// classes with a zero denominator contribute 0.
inline TargetMetrics metrics_from_confusion(data::Target target, Confusion c) {
  const std::size_t n = c.total();
  if (n == 0) throw DataError("cannot compute metrics on an empty evaluation set");
  TargetMetrics m;
  m.target = target;
  m.accuracy = static_cast<double>(c.trace()) / static_cast<double>(n);
  for (std::size_t k = 0; k < c.classes; ++k) {
    const double tp = static_cast<double>(c.at(k, k));
    const double support = static_cast<double>(c.row_sum(k));
    const double predicted = static_cast<double>(c.col_sum(k));
    const double p = predicted > 0 ? tp / predicted : 0.0;
    const double r = support > 0 ? tp / support : 0.0;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    const double w = support / static_cast<double>(n);
    m.precision += w * p;
    m.recall += w * r;
    m.f1 += w * f;
  }
  m.confusion = std::move(c);
  return m;
}

inline TargetMetrics compute_metrics(data::Target target, const std::vector<int>& truth,
                                     const std::vector<int>& pred) {
  if (truth.empty()) throw DataError("cannot compute metrics on an empty evaluation set");
  return metrics_from_confusion(target, confusion_matrix(truth, pred, data::cardinality(target)));
}

}  // namespace segaa::harness

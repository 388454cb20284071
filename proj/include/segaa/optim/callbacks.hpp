#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>

#include "segaa/common.hpp"

namespace segaa::optim {

inline constexpr double kImprovementThreshold = 1e-4;

enum class StopDecision { Continue, Stop };

/// Early stopping on a higher-is-better metric.
class EarlyStop {
 public:
  explicit EarlyStop(std::size_t patience = 5, bool restore_best = true, double min_delta = kImprovementThreshold)
      : patience_(patience), restore_best_(restore_best), min_delta_(min_delta) {
    if (patience == 0) throw UsageError("early stopping patience must be at least 1");
  }

  /// Feed the metric of the epoch just finished (epochs counted from 1).
  StopDecision update(double metric) {
    ++epoch_;
    improved_ = metric > best_ + min_delta_;
    if (improved_) {
      best_ = metric;
      best_epoch_ = epoch_;
      wait_ = 0;
    } else {
      ++wait_;
    }
    return wait_ >= patience_ ? StopDecision::Stop : StopDecision::Continue;
  }

  bool improved() const { return improved_; }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t epochs_seen() const { return epoch_; }
  bool restore_best() const { return restore_best_; }
  std::size_t patience() const { return patience_; }

 private:
  std::size_t patience_;
  bool restore_best_;
  double min_delta_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0, epoch_ = 0, wait_ = 0;
  bool improved_ = false;
};

/// Multiplies the learning rate by `factor` after `patience` epochs without
/// improvement, floored at min_lr. The counter resets on improvement and
/// after each reduction.
class PlateauLr {
 public:
  explicit PlateauLr(std::size_t patience = 3, double factor = 0.5, double min_lr = 1e-6,
                     double min_delta = kImprovementThreshold)
      : patience_(patience), factor_(factor), min_lr_(min_lr), min_delta_(min_delta) {
    if (!(factor > 0.0 && factor < 1.0)) throw UsageError("plateau factor must lie in (0, 1)");
    if (patience == 0) throw UsageError("plateau patience must be at least 1");
  }

  double update(double metric, double lr) {
    if (metric > best_ + min_delta_) {
      best_ = metric;
      wait_ = 0;
      return lr;
    }
    if (++wait_ >= patience_) {
      wait_ = 0;
      return std::max(lr * factor_, min_lr_);
    }
    return lr;
  }

 private:
  std::size_t patience_;
  double factor_, min_lr_, min_delta_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t wait_ = 0;
};

}  // namespace segaa::optim

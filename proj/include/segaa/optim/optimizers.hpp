#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segaa/nn/layers.hpp"

namespace segaa::optim {

struct SgdConfig {
  double lr = 0.0005;
  double decay = 1e-6;
  double momentum = 0.9;
  bool nesterov = true;

  void validate() const {
    if (!(lr > 0.0)) throw UsageError("SGD learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("SGD momentum must lie in [0, 1)");
    if (decay < 0.0) throw UsageError("SGD decay must be non-negative");
  }
  bool operator==(const SgdConfig&) const = default;
};

/// Shared by Adam and Nadam.
struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw UsageError("Adam learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
      throw UsageError("Adam betas must lie in [0, 1)");
    }
  }
  bool operator==(const AdamConfig&) const = default;
};

using NadamConfig = AdamConfig;

inline void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw UsageError("optimizer parameter/gradient size mismatch");
}

/// One SGD step at step index t (0-based): lr_t = lr / (1 + decay t),
/// v <- m v - lr_t g, then theta <- theta + m v - lr_t g (Nesterov) or
/// theta <- theta + v.
template <typename T>
void sgd_step(std::span<T> theta, std::span<const T> grad, std::span<T> velocity, const SgdConfig& c,
              std::uint64_t t) {
  check_sizes(theta.size(), grad.size());
  check_sizes(theta.size(), velocity.size());
  const T lr_t = static_cast<T>(c.lr / (1.0 + c.decay * static_cast<double>(t)));
  const T m = static_cast<T>(c.momentum);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity[i] = m * velocity[i] - lr_t * grad[i];
    if (c.nesterov) {
      theta[i] += m * velocity[i] - lr_t * grad[i];
    } else {
      theta[i] += velocity[i];
    }
  }
}

/// One Adam step at step index t (1-based).
template <typename T>
void adam_step(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v, const AdamConfig& c,
               std::uint64_t t) {
  check_sizes(theta.size(), grad.size());
  check_sizes(theta.size(), m.size());
  check_sizes(theta.size(), v.size());
  if (t == 0) throw UsageError("Adam step index starts at 1");
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T bc1 = static_cast<T>(1.0 - std::pow(c.beta1, static_cast<double>(t)));
  const T bc2 = static_cast<T>(1.0 - std::pow(c.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(c.lr), eps = static_cast<T>(c.epsilon);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (T(1) - b2) * grad[i] * grad[i];
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

/// Nadam: Adam moments with the look-ahead numerator
/// beta1 * mhat + (1 - beta1) * g / (1 - beta1^t).
template <typename T>
void nadam_step(std::span<T> theta, std::span<const T> grad, std::span<T> m, std::span<T> v,
                const NadamConfig& c, std::uint64_t t) {
  check_sizes(theta.size(), grad.size());
  check_sizes(theta.size(), m.size());
  check_sizes(theta.size(), v.size());
  if (t == 0) throw UsageError("Nadam step index starts at 1");
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T bc1 = static_cast<T>(1.0 - std::pow(c.beta1, static_cast<double>(t)));
  const T bc2 = static_cast<T>(1.0 - std::pow(c.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(c.lr), eps = static_cast<T>(c.epsilon);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (T(1) - b2) * grad[i] * grad[i];
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    const T lookahead = b1 * mhat + (T(1) - b1) * grad[i] / bc1;
    theta[i] -= lr * lookahead / (std::sqrt(vhat) + eps);
  }
}

enum class OptimizerKind { Sgd, Adam, Nadam };

inline std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Nadam: return "nadam";
  }
  return "?";
}

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "nadam") return OptimizerKind::Nadam;
  throw UsageError("unknown optimizer '" + std::string(s) + "' (expected sgd, adam or nadam)");
}

/// Optimizer over a fixed list of network parameters; owns the moment buffers.
template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, SgdConfig sgd, AdamConfig adam, std::vector<nn::Param<T>*> params)
      : kind_(kind), sgd_(sgd), adam_(adam), params_(std::move(params)) {
    if (kind_ == OptimizerKind::Sgd) sgd_.validate(); else adam_.validate();
    for (auto* p : params_) {
      first_.emplace_back(p->value.size(), T(0));
      if (kind_ != OptimizerKind::Sgd) second_.emplace_back(p->value.size(), T(0));
    }
  }

  static Optimizer sgd(const SgdConfig& c, std::vector<nn::Param<T>*> params) {
    return Optimizer(OptimizerKind::Sgd, c, {}, std::move(params));
  }
  static Optimizer adam(const AdamConfig& c, std::vector<nn::Param<T>*> params) {
    return Optimizer(OptimizerKind::Adam, {}, c, std::move(params));
  }
  static Optimizer nadam(const NadamConfig& c, std::vector<nn::Param<T>*> params) {
    return Optimizer(OptimizerKind::Nadam, {}, c, std::move(params));
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      std::span<T> theta(params_[i]->value.data);
      std::span<const T> grad(params_[i]->grad.data);
      switch (kind_) {
        case OptimizerKind::Sgd: sgd_step<T>(theta, grad, first_[i], sgd_, steps_); break;
        case OptimizerKind::Adam: adam_step<T>(theta, grad, first_[i], second_[i], adam_, steps_ + 1); break;
        case OptimizerKind::Nadam: nadam_step<T>(theta, grad, first_[i], second_[i], adam_, steps_ + 1); break;
      }
    }
    ++steps_;
  }

  double learning_rate() const { return kind_ == OptimizerKind::Sgd ? sgd_.lr : adam_.lr; }
  void set_learning_rate(double lr) { (kind_ == OptimizerKind::Sgd ? sgd_.lr : adam_.lr) = lr; }
  std::uint64_t steps() const { return steps_; }
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  SgdConfig sgd_;
  AdamConfig adam_;
  std::vector<nn::Param<T>*> params_;
  std::vector<std::vector<T>> first_, second_;
  std::uint64_t steps_ = 0;
};

}  // namespace segaa::optim

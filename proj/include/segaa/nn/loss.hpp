#pragma once

#include <algorithm>
#include <cmath>

#include "segaa/nn/tensor.hpp"

namespace segaa::nn {

inline constexpr double kProbClip = 1e-12;

/// Mean over the batch of -sum_k t_k log p_k, probabilities clipped at 1e-12.
template <typename T>
double categorical_ce(const Tensor<T>& probs, const Tensor<T>& onehot) {
  if (probs.shape != onehot.shape || probs.rank() != 2) throw UsageError("categorical_ce shape mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (onehot.data[i] != T(0)) {
      loss -= static_cast<double>(onehot.data[i]) * std::log(std::max<double>(probs.data[i], kProbClip));
    }
  }
  return loss / static_cast<double>(probs.dim(0));
}

/// Mean binary cross-entropy for batch x 1 probabilities.
template <typename T>
double binary_ce(const Tensor<T>& probs, const Tensor<T>& target) {
  if (probs.shape != target.shape || probs.rank() != 2) throw UsageError("binary_ce shape mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp<double>(probs.data[i], kProbClip, 1.0 - kProbClip);
    const double t = target.data[i];
    loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return loss / static_cast<double>(probs.dim(0));
}

/// Gradient of softmax+CE (or sigmoid+BCE) with respect to the logits:
/// (p - t) / batch. Both fusions reduce to the same expression.
template <typename T>
Tensor<T> fused_logit_grad(const Tensor<T>& probs, const Tensor<T>& target) {
  if (probs.shape != target.shape || probs.rank() != 2) throw UsageError("loss gradient shape mismatch");
  Tensor<T> g(probs.shape);
  const T inv_batch = T(1) / static_cast<T>(probs.dim(0));
  for (std::size_t i = 0; i < probs.size(); ++i) g.data[i] = (probs.data[i] - target.data[i]) * inv_batch;
  return g;
}

}  // namespace segaa::nn

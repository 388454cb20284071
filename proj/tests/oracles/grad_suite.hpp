#pragma once

// Finite-difference gradient cases shared by the unit tests and the
// acceptance binary. Each case returns the worst relative error over one seed.

#include <string>
#include <vector>

#include "oracles/finite_diff.hpp"
#include "segaa/nn/network.hpp"

namespace oracle {

using segaa::nn::Activation;
using segaa::nn::BatchNorm;
using segaa::nn::Conv1d;
using segaa::nn::Dense;
using segaa::nn::LayerSpec;
using segaa::nn::MaxPool1d;
using segaa::nn::Network;
using segaa::nn::NetworkSpec;
using segaa::nn::Padding;

inline GradReport dense_case(std::uint64_t seed) {
  segaa::Rng rng(seed);
  Dense<double> d(4, 3);
  d.weight().value = random_tensor({4, 3}, rng);
  d.bias().value = random_tensor({3}, rng);
  return check_layer(d, random_tensor({5, 4}, rng), Mode::Train, seed + 1);
}

inline GradReport conv_case(std::uint64_t seed, Padding pad, std::size_t stride) {
  segaa::Rng rng(seed);
  Conv1d<double> c(2, 3, 3, stride, pad);
  c.weight().value = random_tensor({3, 3, 2}, rng);
  c.bias().value = random_tensor({3}, rng);
  return check_layer(c, random_tensor({2, 7, 2}, rng), Mode::Train, seed + 1);
}

inline GradReport batchnorm_case(std::uint64_t seed) {
  segaa::Rng rng(seed);
  BatchNorm<double> bn(3);
  bn.gamma().value = random_tensor({3}, rng, 0.5, 1.5);
  bn.beta().value = random_tensor({3}, rng);
  return check_layer(bn, random_tensor({2, 5, 3}, rng), Mode::Train, seed + 1);
}

inline GradReport maxpool_case(std::uint64_t seed) {
  segaa::Rng rng(seed);
  MaxPool1d<double> p(2, 2);
  return check_layer(p, distinct_values({2, 7, 3}, rng), Mode::Train, seed + 1);
}

inline GradReport relu_case(std::uint64_t seed) {
  segaa::Rng rng(seed);
  segaa::nn::Relu<double> r;
  return check_layer(r, away_from_zero({4, 5}, rng), Mode::Train, seed + 1);
}

/// d/dz of mean CE(softmax(z), t), compared with the fused (p - t) / batch.
inline GradReport softmax_ce_case(std::uint64_t seed) {
  segaa::Rng rng(seed);
  const std::size_t batch = 4, k = 6;
  Tensor<double> z = random_tensor({batch, k}, rng, -3, 3), t({batch, k});
  for (std::size_t i = 0; i < batch; ++i) t.data[i * k + rng.below(k)] = 1.0;
  const auto g = segaa::nn::fused_logit_grad(segaa::nn::softmax(z), t);
  GradReport rep;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double n = central(z.data[i], [&] { return segaa::nn::categorical_ce(segaa::nn::softmax(z), t); });
    const double e = rel_error(g.data[i], n);
    ++rep.checked;
    if (e > rep.max_rel) {
      rep.max_rel = e;
      rep.worst = "z[" + std::to_string(i) + "]";
    }
  }
  return rep;
}

inline GradReport sigmoid_bce_case(std::uint64_t seed) {
  segaa::Rng rng(seed);
  const std::size_t batch = 6;
  Tensor<double> z = random_tensor({batch, 1}, rng, -3, 3), t({batch, 1});
  for (double& v : t.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  auto probs = [&] { return Network<double>::activate(Activation::Sigmoid, z); };
  const auto g = segaa::nn::fused_logit_grad(probs(), t);
  GradReport rep;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double n = central(z.data[i], [&] { return segaa::nn::binary_ce(probs(), t); });
    const double e = rel_error(g.data[i], n);
    ++rep.checked;
    if (e > rep.max_rel) {
      rep.max_rel = e;
      rep.worst = "z[" + std::to_string(i) + "]";
    }
  }
  return rep;
}

/// Conv, batch norm, pooling and a softmax and a sigmoid head, end to end.
/// Smooth trunk activations keep ReLU kinks out of the stencil.
inline NetworkSpec small_network_spec() {
  NetworkSpec s;
  s.name = "fd";
  s.input = {6, 2};
  s.trunk = {LayerSpec::conv1d(3, 3), LayerSpec::batchnorm(), {.kind = segaa::nn::LayerKind::Sigmoid},
             LayerSpec::maxpool(2, 2), LayerSpec::flatten(), LayerSpec::dense(4),
             {.kind = segaa::nn::LayerKind::Sigmoid}};
  s.heads = {{"e", 3, Activation::Softmax}, {"g", 1, Activation::Sigmoid}};
  return s;
}

inline GradReport network_case(std::uint64_t seed) {
  segaa::Rng rng(seed);
  Network<double> net(small_network_spec(), seed);
  const std::size_t batch = 4;
  const Tensor<double> x = random_tensor({batch, 6, 2}, rng, -2, 2);
  Tensor<double> te({batch, 3}), tg({batch, 1});
  for (std::size_t i = 0; i < batch; ++i) {
    te.data[i * 3 + rng.below(3)] = 1.0;
    tg.data[i] = static_cast<double>(rng.below(2));
  }
  auto loss = [&] {
    const auto& p = net.forward(x, Mode::Train);
    return segaa::nn::categorical_ce(p[0], te) + segaa::nn::binary_ce(p[1], tg);
  };
  const auto& p = net.forward(x, Mode::Train);
  net.backward({segaa::nn::fused_logit_grad(p[0], te), segaa::nn::fused_logit_grad(p[1], tg)});
  auto params = net.params();
  std::vector<std::vector<double>> analytic;
  for (auto* q : params) analytic.push_back(q->grad.data);
  GradReport rep;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k]->value.size(); ++i) {
      const double n = central(params[k]->value.data[i], loss);
      const double e = rel_error(analytic[k][i], n);
      ++rep.checked;
      if (e > rep.max_rel) {
        rep.max_rel = e;
        rep.worst = "param" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

struct SuiteCase {
  std::string name;
  std::function<GradReport(std::uint64_t)> run;
};

inline std::vector<SuiteCase> gradient_suite() {
  return {
      {"dense", dense_case},
      {"conv1d_same", [](std::uint64_t s) { return conv_case(s, Padding::Same, 1); }},
      {"conv1d_valid", [](std::uint64_t s) { return conv_case(s, Padding::Valid, 1); }},
      {"conv1d_valid_stride2", [](std::uint64_t s) { return conv_case(s, Padding::Valid, 2); }},
      {"batchnorm_train", batchnorm_case},
      {"maxpool_routing", maxpool_case},
      {"relu", relu_case},
      {"softmax_ce", softmax_ce_case},
      {"sigmoid_bce", sigmoid_bce_case},
      {"network", network_case},
  };
}

}  // namespace oracle

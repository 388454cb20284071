#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "segaa/nn/tensor.hpp"

namespace segaa::nn {

enum class LayerKind { Dense, Conv1d, BatchNorm, MaxPool1d, Dropout, Flatten, Relu, Sigmoid, Softmax };
enum class Padding { Same, Valid };
enum class Activation { Softmax, Sigmoid };
enum class Mode { Train, Infer };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Relu: return "relu";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

inline LayerKind parse_layer_kind(std::string_view s) {
  for (auto k : {LayerKind::Dense, LayerKind::Conv1d, LayerKind::BatchNorm, LayerKind::MaxPool1d,
                 LayerKind::Dropout, LayerKind::Flatten, LayerKind::Relu, LayerKind::Sigmoid,
                 LayerKind::Softmax}) {
    if (to_string(k) == s) return k;
  }
  throw DataError("unknown layer kind '" + std::string(s) + "'");
}

inline std::string_view to_string(Activation a) { return a == Activation::Softmax ? "softmax" : "sigmoid"; }
inline Activation parse_activation(std::string_view s) {
  if (s == "softmax") return Activation::Softmax;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw DataError("unknown activation '" + std::string(s) + "'");
}

/// One trunk layer. Only the fields relevant to `kind` are read.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t units = 0;    // dense
  std::size_t filters = 0;  // conv1d
  std::size_t kernel = 0;   // conv1d
  std::size_t stride = 1;   // conv1d, maxpool1d
  Padding padding = Padding::Same;
  std::size_t pool = 0;     // maxpool1d
  double rate = 0.0;        // dropout

  static LayerSpec dense(std::size_t units) { return {.kind = LayerKind::Dense, .units = units}; }
  static LayerSpec conv1d(std::size_t filters, std::size_t kernel, std::size_t stride = 1,
                          Padding pad = Padding::Same) {
    return {.kind = LayerKind::Conv1d, .filters = filters, .kernel = kernel, .stride = stride, .padding = pad};
  }
  static LayerSpec batchnorm() { return {.kind = LayerKind::BatchNorm}; }
  static LayerSpec maxpool(std::size_t pool, std::size_t stride) {
    return {.kind = LayerKind::MaxPool1d, .stride = stride, .pool = pool};
  }
  static LayerSpec dropout(double rate) { return {.kind = LayerKind::Dropout, .rate = rate}; }
  static LayerSpec flatten() { return {.kind = LayerKind::Flatten}; }
  static LayerSpec relu() { return {.kind = LayerKind::Relu}; }

  void validate() const {
    auto bad = [&](const char* why) { throw UsageError(std::string(to_string(kind)) + " layer: " + why); };
    switch (kind) {
      case LayerKind::Dense: if (units == 0) bad("units must be positive"); break;
      case LayerKind::Conv1d:
        if (filters == 0 || kernel == 0 || stride == 0) bad("filters, kernel and stride must be positive");
        break;
      case LayerKind::MaxPool1d: if (pool == 0 || stride == 0) bad("pool and stride must be positive"); break;
      case LayerKind::Dropout: if (!(rate >= 0.0 && rate < 1.0)) bad("rate must lie in [0, 1)"); break;
      default: break;
    }
  }
  bool operator==(const LayerSpec&) const = default;
};

/// A classification head: a dense layer of `units` followed by `activation`.
struct HeadSpec {
  std::string name;
  std::size_t units = 0;
  Activation activation = Activation::Softmax;
  bool operator==(const HeadSpec&) const = default;
};

/// Declarative network: per-example input shape, shared trunk, output heads.
struct NetworkSpec {
  std::string name;
  Shape input;  // {features} for dense trunks, {length, channels} for conv trunks
  std::vector<LayerSpec> trunk;
  std::vector<HeadSpec> heads;
  bool operator==(const NetworkSpec&) const = default;
};

}  // namespace segaa::nn

#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "segaa/nn/layers.hpp"
#include "segaa/nn/loss.hpp"

namespace segaa::nn {

/// A named reference to a tensor that is part of the model state.
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
  bool trainable;
};

/// Per-example output shape after each trunk layer, without allocating weights.
inline std::vector<Shape> infer_trunk_shapes(const NetworkSpec& spec) {
  std::vector<Shape> out;
  Shape s = spec.input;
  for (const LayerSpec& ls : spec.trunk) {
    ls.validate();
    switch (ls.kind) {
      case LayerKind::Dense:
        if (s.size() != 1) throw UsageError("dense layer needs a flat input, got " + shape_str(s));
        s = {ls.units};
        break;
      case LayerKind::Conv1d:
        if (s.size() != 2) throw UsageError("conv1d layer needs length x channels input, got " + shape_str(s));
        s = {conv1d_output_length(s[0], ls.kernel, ls.stride, ls.padding), ls.filters};
        break;
      case LayerKind::MaxPool1d:
        if (s.size() != 2) throw UsageError("maxpool1d layer needs length x channels input, got " + shape_str(s));
        s = {maxpool1d_output_length(s[0], ls.pool, ls.stride), s[1]};
        break;
      case LayerKind::Flatten: s = {numel(s)}; break;
      default: break;
    }
    out.push_back(s);
  }
  return out;
}

/// Instantiated NetworkSpec: trunk layers feeding one dense head per output.
template <typename T>
class Network {
 public:
  struct Head {
    HeadSpec spec;
    Dense<T> dense;
  };

  Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    if (spec_.heads.empty()) throw UsageError("network '" + spec_.name + "' has no output heads");
    if (spec_.input.empty()) throw UsageError("network '" + spec_.name + "' has no input shape");
    Shape shape = spec_.input;
    for (std::size_t i = 0; i < spec_.trunk.size(); ++i) {
      const LayerSpec& ls = spec_.trunk[i];
      ls.validate();
      const std::uint64_t layer_seed = derive_seed(seed, i + 1);
      std::unique_ptr<Layer<T>> layer;
      switch (ls.kind) {
        case LayerKind::Dense:
          if (shape.size() != 1) throw UsageError("dense layer needs a flat input, got " + shape_str(shape));
          layer = std::make_unique<Dense<T>>(shape[0], ls.units);
          break;
        case LayerKind::Conv1d:
          if (shape.size() != 2) throw UsageError("conv1d layer needs length x channels input, got " + shape_str(shape));
          layer = std::make_unique<Conv1d<T>>(shape[1], ls.filters, ls.kernel, ls.stride, ls.padding);
          break;
        case LayerKind::BatchNorm: layer = std::make_unique<BatchNorm<T>>(shape.back()); break;
        case LayerKind::MaxPool1d: layer = std::make_unique<MaxPool1d<T>>(ls.pool, ls.stride); break;
        case LayerKind::Dropout: layer = std::make_unique<Dropout<T>>(ls.rate, layer_seed); break;
        case LayerKind::Flatten: layer = std::make_unique<Flatten<T>>(); break;
        case LayerKind::Relu: layer = std::make_unique<Relu<T>>(); break;
        case LayerKind::Sigmoid: layer = std::make_unique<Sigmoid<T>>(); break;
        case LayerKind::Softmax: layer = std::make_unique<Softmax<T>>(); break;
      }
      shape = layer->output_shape(shape);
      shapes_.push_back(shape);
      init_he(*layer, layer_seed);
      trunk_.push_back(std::move(layer));
    }
    if (shape.size() != 1) throw UsageError("network trunk must end flat, got " + shape_str(shape));
    for (std::size_t h = 0; h < spec_.heads.size(); ++h) {
      const HeadSpec& hs = spec_.heads[h];
      if (hs.units == 0) throw UsageError("head '" + hs.name + "' has zero units");
      if (hs.activation == Activation::Sigmoid && hs.units != 1) {
        throw UsageError("sigmoid head '" + hs.name + "' must have exactly one unit");
      }
      heads_.push_back(Head{hs, Dense<T>(shape[0], hs.units)});
      init_glorot(heads_.back().dense, derive_seed(seed, 1000 + h));
    }
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const NetworkSpec& spec() const { return spec_; }
  std::size_t head_count() const { return heads_.size(); }
  const Head& head(std::size_t i) const { return heads_.at(i); }
  Layer<T>& layer(std::size_t i) { return *trunk_.at(i); }
  std::size_t layer_count() const { return trunk_.size(); }
  /// Per-example output shape after each trunk layer.
  const std::vector<Shape>& trunk_shapes() const { return shapes_; }

  /// x: batch followed by spec().input. Returns head probabilities.
  const std::vector<Tensor<T>>& forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = check_input(x);
    for (auto& layer : trunk_) h = layer->forward(h, mode);
    probs_.clear();
    for (auto& head : heads_) {
      Tensor<T> logits = head.dense.forward(h, mode);
      probs_.push_back(activate(head.spec.activation, logits));
    }
    return probs_;
  }

  /// Logit gradients per head, in head order. Fills every parameter gradient.
  void backward(const std::vector<Tensor<T>>& logit_grads) {
    if (logit_grads.size() != heads_.size()) throw UsageError("one logit gradient per head required");
    Tensor<T> g;
    for (std::size_t i = 0; i < heads_.size(); ++i) {
      Tensor<T> gi = heads_[i].dense.backward(logit_grads[i]);
      if (i == 0) {
        g = std::move(gi);
      } else {
        for (std::size_t k = 0; k < g.size(); ++k) g.data[k] += gi.data[k];
      }
    }
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = (*it)->backward(g);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& l : trunk_) {
      for (auto* p : l->params()) out.push_back(p);
    }
    for (auto& h : heads_) {
      for (auto* p : h.dense.params()) out.push_back(p);
    }
    return out;
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->value.size();
    return n;
  }

  /// Every tensor of model state, trainable or not, with stable names.
  std::vector<NamedTensor<T>> named_tensors() {
    std::vector<NamedTensor<T>> out;
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
      const std::string prefix = "trunk." + std::to_string(i) + "." + std::string(to_string(trunk_[i]->kind())) + ".";
      for (auto* p : trunk_[i]->params()) out.push_back({prefix + p->name, &p->value, true});
      std::size_t b = 0;
      for (auto* t : trunk_[i]->buffers()) {
        out.push_back({prefix + (b++ == 0 ? "running_mean" : "running_var"), t, false});
      }
    }
    for (auto& h : heads_) {
      for (auto* p : h.dense.params()) out.push_back({"head." + h.spec.name + "." + p->name, &p->value, true});
    }
    return out;
  }

  using Snapshot = std::vector<std::vector<T>>;
  Snapshot snapshot() {
    Snapshot s;
    for (auto& nt : named_tensors()) s.push_back(nt.tensor->data);
    return s;
  }
  void restore(const Snapshot& s) {
    auto tensors = named_tensors();
    if (s.size() != tensors.size()) throw UsageError("snapshot does not match network");
    for (std::size_t i = 0; i < s.size(); ++i) tensors[i].tensor->data = s[i];
  }

  /// Name of the first layer whose inference output is non-finite, if any.
  std::optional<std::string> first_nonfinite_layer(const Tensor<T>& x) {
    if (!x.all_finite()) return "input";
    Tensor<T> h = check_input(x);
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
      h = trunk_[i]->forward(h, Mode::Infer);
      if (!h.all_finite()) return "trunk." + std::to_string(i) + "." + std::string(to_string(trunk_[i]->kind()));
    }
    for (auto& head : heads_) {
      if (!head.dense.forward(h, Mode::Infer).all_finite()) return "head." + head.spec.name;
    }
    return std::nullopt;
  }

  static Tensor<T> activate(Activation a, const Tensor<T>& logits) {
    if (a == Activation::Softmax) return softmax(logits);
    Tensor<T> p = logits;
    for (auto& v : p.data) v = sigmoid(v);
    return p;
  }

 private:
  Tensor<T> check_input(const Tensor<T>& x) const {
    if (x.rank() < 1 || x.size() != x.dim(0) * numel(spec_.input)) {
      throw UsageError("network '" + spec_.name + "' expects input " + shape_str(spec_.input) + " per example, got " +
                       shape_str(x.shape));
    }
    Shape s{x.dim(0)};
    s.insert(s.end(), spec_.input.begin(), spec_.input.end());
    return x.shape == s ? x : x.reshaped(s);
  }

  static void fill_uniform(Tensor<T>& t, double limit, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-limit, limit));
  }

  static void init_he(Layer<T>& layer, std::uint64_t seed) {
    if (auto* d = dynamic_cast<Dense<T>*>(&layer)) {
      fill_uniform(d->weight().value, std::sqrt(6.0 / static_cast<double>(d->in())), seed);
    } else if (auto* c = dynamic_cast<Conv1d<T>*>(&layer)) {
      fill_uniform(c->weight().value, std::sqrt(6.0 / static_cast<double>(c->kernel() * c->channels())), seed);
    }
  }

  static void init_glorot(Dense<T>& d, std::uint64_t seed) {
    fill_uniform(d.weight().value, std::sqrt(6.0 / static_cast<double>(d.in() + d.out())), seed);
  }

  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer<T>>> trunk_;
  std::vector<Shape> shapes_;
  std::vector<Head> heads_;
  std::vector<Tensor<T>> probs_;
};

}  // namespace segaa::nn

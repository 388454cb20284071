#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "segaa/nn/spec.hpp"

namespace segaa::nn {

/// A trainable tensor and its gradient buffer.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

/// Layer interface. forward caches what backward needs; backward fills the
/// parameter gradients (overwriting) and returns the input gradient.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  /// Per-example output shape for a per-example input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::vector<Param<T>*> params() { return {}; }
  /// Non-trainable tensors that are part of the model (batch-norm running stats).
  virtual std::vector<Tensor<T>*> buffers() { return {}; }
};

namespace detail {

inline void expect_rank(const Shape& s, std::size_t rank, const char* layer) {
  if (s.size() != rank) {
    throw UsageError(std::string(layer) + " expects rank-" + std::to_string(rank) + " input, got " + shape_str(s));
  }
}

}  // namespace detail

/// Zeros added before and after a sequence of length `len` by conv1d padding.
/// Same padding splits the total evenly with any odd zero on the right.
inline std::pair<std::size_t, std::size_t> conv1d_padding(std::size_t len, std::size_t kernel, std::size_t stride,
                                                          Padding pad) {
  if (pad == Padding::Valid) return {0, 0};
  const std::size_t out = (len + stride - 1) / stride;
  const std::size_t need = (out - 1) * stride + kernel;
  const std::size_t total = need > len ? need - len : 0;
  return {total / 2, total - total / 2};
}

/// floor((padded - kernel) / stride) + 1.
inline std::size_t conv1d_output_length(std::size_t len, std::size_t kernel, std::size_t stride, Padding pad) {
  const auto [l, r] = conv1d_padding(len, kernel, stride, pad);
  const std::size_t padded = len + l + r;
  if (kernel > padded) throw UsageError("conv1d kernel longer than padded input");
  return (padded - kernel) / stride + 1;
}

/// floor((len - pool) / stride) + 1.
inline std::size_t maxpool1d_output_length(std::size_t len, std::size_t pool, std::size_t stride) {
  if (pool > len) {
    throw UsageError("maxpool1d pool " + std::to_string(pool) + " exceeds input length " + std::to_string(len));
  }
  return (len - pool) / stride + 1;
}

/// y = x W + b with x: batch x in, W: in x out.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out)
      : w_{"W", Tensor<T>({in, out}), Tensor<T>({in, out})}, b_{"b", Tensor<T>({out}), Tensor<T>({out})} {}

  LayerKind kind() const override { return LayerKind::Dense; }
  std::size_t in() const { return w_.value.dim(0); }
  std::size_t out() const { return w_.value.dim(1); }

  Shape output_shape(const Shape& s) const override {
    if (s.size() != 1 || s[0] != in()) {
      throw UsageError("dense layer expects input of width " + std::to_string(in()) + ", got " + shape_str(s));
    }
    return {out()};
  }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    detail::expect_rank(x.shape, 2, "dense");
    if (x.dim(1) != in()) throw UsageError("dense layer input width mismatch: " + shape_str(x.shape));
    x_ = x;
    const std::size_t batch = x.dim(0);
    Tensor<T> y({batch, out()});
    auto Y = as_matrix(y.data, batch, out());
    Y.noalias() = as_matrix(x.data, batch, in()) * as_matrix(w_.value.data, in(), out());
    const auto bias = as_matrix(b_.value.data, 1, out());
    Y.rowwise() += bias.row(0);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t batch = x_.dim(0);
    if (gy.shape != Shape{batch, out()}) throw UsageError("dense backward gradient shape mismatch");
    const auto G = as_matrix(gy.data, batch, out());
    as_matrix(w_.grad.data, in(), out()).noalias() = as_matrix(x_.data, batch, in()).transpose() * G;
    for (std::size_t j = 0; j < out(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < batch; ++i) acc += gy.data[i * out() + j];
      b_.grad.data[j] = static_cast<T>(acc);
    }
    Tensor<T> gx({batch, in()});
    as_matrix(gx.data, batch, in()).noalias() = G * as_matrix(w_.value.data, in(), out()).transpose();
    return gx;
  }

  std::vector<Param<T>*> params() override { return {&w_, &b_}; }
  Param<T>& weight() { return w_; }
  Param<T>& bias() { return b_; }

 private:
  Param<T> w_, b_;
  Tensor<T> x_;
};

/// Cross-correlation over batch x length x channels. Kernel layout is
/// filters x kernel x in_channels.
template <typename T>
class Conv1d final : public Layer<T> {
 public:
  Conv1d(std::size_t in_channels, std::size_t filters, std::size_t kernel, std::size_t stride, Padding pad)
      : k_{"K", Tensor<T>({filters, kernel, in_channels}), Tensor<T>({filters, kernel, in_channels})},
        b_{"b", Tensor<T>({filters}), Tensor<T>({filters})},
        stride_(stride),
        pad_(pad) {
    if (stride == 0 || kernel == 0 || filters == 0) throw UsageError("conv1d parameters must be positive");
  }

  LayerKind kind() const override { return LayerKind::Conv1d; }
  std::size_t filters() const { return k_.value.dim(0); }
  std::size_t kernel() const { return k_.value.dim(1); }
  std::size_t channels() const { return k_.value.dim(2); }

  /// Zeros added before and after the sequence.
  std::pair<std::size_t, std::size_t> padding(std::size_t len) const {
    return conv1d_padding(len, kernel(), stride_, pad_);
  }
  std::size_t output_length(std::size_t len) const { return conv1d_output_length(len, kernel(), stride_, pad_); }

  Shape output_shape(const Shape& s) const override {
    if (s.size() != 2 || s[1] != channels()) {
      throw UsageError("conv1d expects length x " + std::to_string(channels()) + " input, got " + shape_str(s));
    }
    return {output_length(s[0]), filters()};
  }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    detail::expect_rank(x.shape, 3, "conv1d");
    if (x.dim(2) != channels()) throw UsageError("conv1d channel mismatch: " + shape_str(x.shape));
    batch_ = x.dim(0);
    len_ = x.dim(1);
    lout_ = output_length(len_);
    im2col(x);
    const std::size_t rows = batch_ * lout_, width = kernel() * channels();
    Tensor<T> y({batch_, lout_, filters()});
    auto Y = as_matrix(y.data, rows, filters());
    Y.noalias() = as_matrix(cols_, rows, width) * as_matrix(k_.value.data, filters(), width).transpose();
    Y.rowwise() += as_matrix(b_.value.data, 1, filters()).row(0);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t rows = batch_ * lout_, width = kernel() * channels();
    if (gy.shape != Shape{batch_, lout_, filters()}) throw UsageError("conv1d backward gradient shape mismatch");
    const auto G = as_matrix(gy.data, rows, filters());
    as_matrix(k_.grad.data, filters(), width).noalias() = G.transpose() * as_matrix(cols_, rows, width);
    for (std::size_t f = 0; f < filters(); ++f) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) acc += gy.data[r * filters() + f];
      b_.grad.data[f] = static_cast<T>(acc);
    }
    dcols_.resize(rows * width);
    as_matrix(dcols_, rows, width).noalias() = G * as_matrix(k_.value.data, filters(), width);

    Tensor<T> gx({batch_, len_, channels()});
    const auto left = static_cast<std::ptrdiff_t>(padding(len_).first);
    const std::size_t ch = channels();
    for (std::size_t b = 0; b < batch_; ++b) {
      for (std::size_t t = 0; t < lout_; ++t) {
        const T* src = dcols_.data() + (b * lout_ + t) * width;
        for (std::size_t j = 0; j < kernel(); ++j) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride_ + j) - left;
          if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len_)) continue;
          T* dst = gx.data.data() + (b * len_ + static_cast<std::size_t>(pos)) * ch;
          for (std::size_t c = 0; c < ch; ++c) dst[c] += src[j * ch + c];
        }
      }
    }
    return gx;
  }

  std::vector<Param<T>*> params() override { return {&k_, &b_}; }
  Param<T>& weight() { return k_; }
  Param<T>& bias() { return b_; }

 private:
  void im2col(const Tensor<T>& x) {
    const std::size_t width = kernel() * channels(), ch = channels();
    const auto left = static_cast<std::ptrdiff_t>(padding(len_).first);
    cols_.assign(batch_ * lout_ * width, T(0));
    for (std::size_t b = 0; b < batch_; ++b) {
      for (std::size_t t = 0; t < lout_; ++t) {
        T* dst = cols_.data() + (b * lout_ + t) * width;
        for (std::size_t j = 0; j < kernel(); ++j) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride_ + j) - left;
          if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len_)) continue;
          const T* src = x.data.data() + (b * len_ + static_cast<std::size_t>(pos)) * ch;
          std::copy_n(src, ch, dst + j * ch);
        }
      }
    }
  }

  Param<T> k_, b_;
  std::size_t stride_;
  Padding pad_;
  std::size_t batch_ = 0, len_ = 0, lout_ = 0;
  std::vector<T> cols_, dcols_;
};

/// Normalizes over every axis but the last (channels).
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t channels, T momentum = T(0.9), T epsilon = T(1e-5))
      : gamma_{"gamma", Tensor<T>({channels}, T(1)), Tensor<T>({channels})},
        beta_{"beta", Tensor<T>({channels}), Tensor<T>({channels})},
        running_mean_({channels}),
        running_var_({channels}, T(1)),
        momentum_(momentum),
        eps_(epsilon) {}

  LayerKind kind() const override { return LayerKind::BatchNorm; }
  std::size_t channels() const { return gamma_.value.size(); }
  T momentum() const { return momentum_; }
  T epsilon() const { return eps_; }

  Shape output_shape(const Shape& s) const override {
    if (s.empty() || s.back() != channels()) throw UsageError("batchnorm channel mismatch: " + shape_str(s));
    return s;
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    if (x.rank() < 2 || x.shape.back() != channels()) throw UsageError("batchnorm channel mismatch: " + shape_str(x.shape));
    const std::size_t c = channels(), n = x.size() / c;
    mode_ = mode;
    xhat_ = Tensor<T>(x.shape);
    inv_std_.assign(c, T(0));
    Tensor<T> y(x.shape);
    if (mode == Mode::Train) {
      if (x.dim(0) < 2) throw UsageError("batchnorm in train mode needs a batch of at least 2");
      std::vector<double> mean(c, 0.0), var(c, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) mean[j] += x.data[i * c + j];
      for (auto& m : mean) m /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const double d = x.data[i * c + j] - mean[j];
          var[j] += d * d;
        }
      for (std::size_t j = 0; j < c; ++j) {
        var[j] /= static_cast<double>(n);
        inv_std_[j] = static_cast<T>(1.0 / std::sqrt(var[j] + static_cast<double>(eps_)));
        running_mean_.data[j] = momentum_ * running_mean_.data[j] + (T(1) - momentum_) * static_cast<T>(mean[j]);
        running_var_.data[j] = momentum_ * running_var_.data[j] + (T(1) - momentum_) * static_cast<T>(var[j]);
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t k = i * c + j;
          xhat_.data[k] = static_cast<T>((x.data[k] - mean[j]) * inv_std_[j]);
          y.data[k] = gamma_.value.data[j] * xhat_.data[k] + beta_.value.data[j];
        }
    } else {
      for (std::size_t j = 0; j < c; ++j) inv_std_[j] = T(1) / std::sqrt(running_var_.data[j] + eps_);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t k = i * c + j;
          xhat_.data[k] = (x.data[k] - running_mean_.data[j]) * inv_std_[j];
          y.data[k] = gamma_.value.data[j] * xhat_.data[k] + beta_.value.data[j];
        }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t c = channels(), n = gy.size() / c;
    if (gy.shape != xhat_.shape) throw UsageError("batchnorm backward gradient shape mismatch");
    std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const std::size_t k = i * c + j;
        sum_g[j] += gy.data[k];
        sum_gx[j] += static_cast<double>(gy.data[k]) * xhat_.data[k];
      }
    for (std::size_t j = 0; j < c; ++j) {
      gamma_.grad.data[j] = static_cast<T>(sum_gx[j]);
      beta_.grad.data[j] = static_cast<T>(sum_g[j]);
    }
    Tensor<T> gx(gy.shape);
    if (mode_ == Mode::Train) {
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t k = i * c + j;
          const double g = gamma_.value.data[j];
          gx.data[k] = static_cast<T>(g * inv_std_[j] *
                                      (gy.data[k] - inv_n * sum_g[j] - xhat_.data[k] * inv_n * sum_gx[j]));
        }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t k = i * c + j;
          gx.data[k] = gy.data[k] * gamma_.value.data[j] * inv_std_[j];
        }
    }
    return gx;
  }

  std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
  std::vector<Tensor<T>*> buffers() override { return {&running_mean_, &running_var_}; }
  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }

 private:
  Param<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  T momentum_, eps_;
  Mode mode_ = Mode::Infer;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

/// Max over windows along the length axis; trailing remainder dropped.
/// Ties route the gradient to the earliest maximal position.
template <typename T>
class MaxPool1d final : public Layer<T> {
 public:
  MaxPool1d(std::size_t pool, std::size_t stride) : pool_(pool), stride_(stride) {
    if (pool == 0 || stride == 0) throw UsageError("maxpool1d parameters must be positive");
  }

  LayerKind kind() const override { return LayerKind::MaxPool1d; }

  std::size_t output_length(std::size_t len) const { return maxpool1d_output_length(len, pool_, stride_); }

  Shape output_shape(const Shape& s) const override {
    detail::expect_rank(s, 2, "maxpool1d");
    return {output_length(s[0]), s[1]};
  }

  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    detail::expect_rank(x.shape, 3, "maxpool1d");
    in_shape_ = x.shape;
    const std::size_t batch = x.dim(0), len = x.dim(1), ch = x.dim(2), lout = output_length(len);
    Tensor<T> y({batch, lout, ch});
    argmax_.assign(y.size(), 0);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < lout; ++t)
        for (std::size_t c = 0; c < ch; ++c) {
          std::size_t best = (b * len + t * stride_) * ch + c;
          for (std::size_t j = 1; j < pool_; ++j) {
            const std::size_t k = (b * len + t * stride_ + j) * ch + c;
            if (x.data[k] > x.data[best]) best = k;
          }
          const std::size_t o = (b * lout + t) * ch + c;
          y.data[o] = x.data[best];
          argmax_[o] = best;
        }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (gy.size() != argmax_.size()) throw UsageError("maxpool1d backward gradient shape mismatch");
    Tensor<T> gx(in_shape_);
    for (std::size_t o = 0; o < gy.size(); ++o) gx.data[argmax_[o]] += gy.data[o];
    return gx;
  }

  const std::vector<std::size_t>& routes() const { return argmax_; }

 private:
  std::size_t pool_, stride_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

/// Inverted dropout: survivors scaled by 1 / (1 - rate) in train mode.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("dropout rate must lie in [0, 1)");
  }

  LayerKind kind() const override { return LayerKind::Dropout; }
  Shape output_shape(const Shape& s) const override { return s; }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    active_ = mode == Mode::Train && rate_ > 0.0;
    if (!active_) return x;
    const T scale = static_cast<T>(1.0 / (1.0 - rate_));
    mask_.assign(x.size(), T(0));
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (rng_.uniform() >= rate_) mask_[i] = scale;
      y.data[i] = x.data[i] * mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!active_) return gy;
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.size(); ++i) gx.data[i] = gy.data[i] * mask_[i];
    return gx;
  }

 private:
  double rate_;
  Rng rng_;
  bool active_ = false;
  std::vector<T> mask_;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::Flatten; }
  Shape output_shape(const Shape& s) const override { return {numel(s)}; }
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    in_shape_ = x.shape;
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
  }
  Tensor<T> backward(const Tensor<T>& gy) override { return gy.reshaped(in_shape_); }

 private:
  Shape in_shape_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::Relu; }
  Shape output_shape(const Shape& s) const override { return s; }
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    y_ = x;
    for (auto& v : y_.data) v = v < T(0) ? T(0) : v;  // NaN passes through
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.size(); ++i) gx.data[i] = y_.data[i] > T(0) ? gy.data[i] : T(0);
    return gx;
  }

 private:
  Tensor<T> y_;
};

template <typename T>
T sigmoid(T z) {
  return z >= T(0) ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

template <typename T>
class Sigmoid final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::Sigmoid; }
  Shape output_shape(const Shape& s) const override { return s; }
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    y_ = x;
    for (auto& v : y_.data) v = sigmoid(v);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(gy.shape);
    for (std::size_t i = 0; i < gy.size(); ++i) gx.data[i] = gy.data[i] * y_.data[i] * (T(1) - y_.data[i]);
    return gx;
  }

 private:
  Tensor<T> y_;
};

/// Row-wise softmax over the last axis with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& z) {
  Tensor<T> p(z.shape);
  const std::size_t k = z.shape.back(), rows = z.size() / k;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = z.data.data() + r * k;
    T* out = p.data.data() + r * k;
    const T m = *std::max_element(in, in + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[j] = std::exp(in[j] - m);
      sum += out[j];
    }
    for (std::size_t j = 0; j < k; ++j) out[j] = static_cast<T>(out[j] / sum);
  }
  return p;
}

template <typename T>
class Softmax final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::Softmax; }
  Shape output_shape(const Shape& s) const override { return s; }
  Tensor<T> forward(const Tensor<T>& x, Mode) override {
    y_ = softmax(x);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(gy.shape);
    const std::size_t k = gy.shape.back(), rows = gy.size() / k;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += static_cast<double>(gy.data[r * k + j]) * y_.data[r * k + j];
      for (std::size_t j = 0; j < k; ++j) {
        gx.data[r * k + j] = static_cast<T>(y_.data[r * k + j] * (gy.data[r * k + j] - dot));
      }
    }
    return gx;
  }

 private:
  Tensor<T> y_;
};

}  // namespace segaa::nn

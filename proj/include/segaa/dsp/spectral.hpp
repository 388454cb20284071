#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "segaa/common.hpp"

namespace segaa::dsp {

/// Frame geometry shared by the feature extractor and the phase vocoder.
struct FrameParams {
  std::size_t frame_length = 2048;
  std::size_t hop = 512;
  std::size_t fft_size = 2048;

  void validate() const {
    if (!(hop > 0 && hop <= frame_length && frame_length <= fft_size)) {
      throw UsageError("frame params must satisfy 0 < hop <= frame_length <= fft_size");
    }
    if ((fft_size & (fft_size - 1)) != 0) throw UsageError("fft_size must be a power of two");
  }
  bool operator==(const FrameParams&) const = default;
};

/// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

/// 1 + floor((n - frame_length) / hop) for n >= frame_length, else 0.
inline std::size_t frame_count(std::size_t n, std::size_t frame_length, std::size_t hop) {
  if (n < frame_length) return 0;
  return 1 + (n - frame_length) / hop;
}

/// Real FFT returning the n/2 + 1 non-negative frequency bins.
class RealFft {
 public:
  RealFft() { fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum); }

  void forward(std::span<const double> in, std::vector<std::complex<double>>& out) {
    buf_.assign(in.begin(), in.end());
    fft_.fwd(out, buf_);
    out.resize(in.size() / 2 + 1);
  }

  /// Inverse of forward, scaled by 1/n.
  void inverse(const std::vector<std::complex<double>>& in, std::size_t n, std::vector<double>& out) {
    cbuf_ = in;
    fft_.inv(out, cbuf_, static_cast<Eigen::Index>(n));
  }

 private:
  Eigen::FFT<double> fft_;
  std::vector<double> buf_;
  std::vector<std::complex<double>> cbuf_;
};

/// Complex spectrogram stored frame-major: frames x (fft_size/2 + 1).
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(std::size_t f, std::size_t k) { return data[f * bins + k]; }
  const std::complex<double>& at(std::size_t f, std::size_t k) const { return data[f * bins + k]; }
};

/// Centered STFT: the signal is zero-padded by fft_size/2 on both sides.
inline Spectrogram stft_centered(std::span<const double> x, const FrameParams& fp) {
  const std::size_t n_fft = fp.fft_size;
  const std::size_t pad = n_fft / 2;
  std::vector<double> padded(x.size() + 2 * pad, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));
  const auto window = hann_window(n_fft);

  Spectrogram s;
  s.frames = frame_count(padded.size(), n_fft, fp.hop);
  s.bins = n_fft / 2 + 1;
  s.data.resize(s.frames * s.bins);
  RealFft fft;
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spec;
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t i = 0; i < n_fft; ++i) frame[i] = padded[f * fp.hop + i] * window[i];
    fft.forward(frame, spec);
    std::copy(spec.begin(), spec.end(), s.data.begin() + static_cast<std::ptrdiff_t>(f * s.bins));
  }
  return s;
}

/// Weighted overlap-add inverse of stft_centered, trimmed/padded to `length`.
inline std::vector<double> istft_centered(const Spectrogram& s, const FrameParams& fp, std::size_t length) {
  const std::size_t n_fft = fp.fft_size;
  const std::size_t pad = n_fft / 2;
  const auto window = hann_window(n_fft);
  const std::size_t total = n_fft + fp.hop * (s.frames > 0 ? s.frames - 1 : 0);
  std::vector<double> out(total, 0.0), norm(total, 0.0);
  RealFft fft;
  std::vector<std::complex<double>> spec(s.bins);
  std::vector<double> frame;
  for (std::size_t f = 0; f < s.frames; ++f) {
    std::copy_n(s.data.begin() + static_cast<std::ptrdiff_t>(f * s.bins), s.bins, spec.begin());
    fft.inverse(spec, n_fft, frame);
    for (std::size_t i = 0; i < n_fft; ++i) {
      out[f * fp.hop + i] += frame[i] * window[i];
      norm[f * fp.hop + i] += window[i] * window[i];
    }
  }
  std::vector<double> y(length, 0.0);
  for (std::size_t i = 0; i < length && i + pad < total; ++i) {
    const double w = norm[i + pad];
    y[i] = w > 1e-10 ? out[i + pad] / w : out[i + pad];
  }
  return y;
}

}  // namespace segaa::dsp

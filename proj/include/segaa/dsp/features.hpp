#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "segaa/dsp/audio.hpp"
#include "segaa/dsp/spectral.hpp"

namespace segaa::dsp {

inline constexpr std::size_t kMfccCount = 40;
inline constexpr std::size_t kFeatureDim = kMfccCount + 2;
inline constexpr std::size_t kZcrIndex = kMfccCount;
inline constexpr std::size_t kRmseIndex = kMfccCount + 1;

/// 40 time-mean MFCCs, mean ZCR, mean RMSE.
using FeatureVector = std::array<double, kFeatureDim>;

struct MfccParams {
  std::size_t n_mels = 64;
  std::size_t n_coeffs = kMfccCount;
  double fmin = 0.0;
  double fmax = 0.0;  // <= 0 means sample_rate / 2
  double log_floor = 1e-10;

  double upper(int sample_rate) const { return fmax > 0.0 ? fmax : sample_rate / 2.0; }

  void validate(int sample_rate) const {
    if (n_coeffs == 0 || n_coeffs > n_mels) throw UsageError("MFCC params need 0 < n_coeffs <= n_mels");
    const double hi = upper(sample_rate);
    if (!(fmin >= 0.0 && fmin < hi && hi <= sample_rate / 2.0)) {
      throw UsageError("MFCC params need 0 <= fmin < fmax <= sample_rate / 2");
    }
    if (!(log_floor > 0.0)) throw UsageError("MFCC log floor must be positive");
  }
  bool operator==(const MfccParams&) const = default;
};

/// Fraction of consecutive pairs whose signs differ; zero counts as non-negative.
inline double zcr(std::span<const double> frame) {
  if (frame.size() < 2) throw UsageError("zcr needs a frame of at least 2 samples");
  std::size_t changes = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    changes += (frame[i - 1] >= 0.0) != (frame[i] >= 0.0);
  }
  return static_cast<double>(changes) / static_cast<double>(frame.size() - 1);
}

inline double rmse(std::span<const double> frame) {
  if (frame.empty()) throw UsageError("rmse needs a non-empty frame");
  double acc = 0.0;
  for (double v : frame) acc += v * v;
  return std::sqrt(acc / static_cast<double>(frame.size()));
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular HTK-mel filters with unit peak, n_mels x (fft_size/2 + 1).
inline std::vector<std::vector<double>> mel_filterbank(int sample_rate, std::size_t fft_size,
                                                       const MfccParams& mp) {
  const std::size_t bins = fft_size / 2 + 1;
  const double lo = hz_to_mel(mp.fmin), hi = hz_to_mel(mp.upper(sample_rate));
  std::vector<double> edges(mp.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(mp.n_mels + 1));
  }
  std::vector<std::vector<double>> bank(mp.n_mels, std::vector<double>(bins, 0.0));
  for (std::size_t m = 0; m < mp.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      bank[m][k] = std::max(0.0, std::min(up, down));
    }
  }
  return bank;
}

/// Orthonormal DCT-II basis, n_out x n_in.
inline std::vector<std::vector<double>> dct2_orthonormal(std::size_t n_in, std::size_t n_out) {
  std::vector<std::vector<double>> basis(n_out, std::vector<double>(n_in));
  for (std::size_t k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_in));
    for (std::size_t n = 0; n < n_in; ++n) {
      basis[k][n] = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                     (2.0 * static_cast<double>(n) + 1.0) / (2.0 * static_cast<double>(n_in)));
    }
  }
  return basis;
}

/// Row-major frames x n_coeffs matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Precomputed window, filterbank and DCT for one (rate, frame, mfcc) setup.
class MfccExtractor {
 public:
  MfccExtractor(int sample_rate, const FrameParams& fp, const MfccParams& mp)
      : rate_(sample_rate), fp_(fp), mp_(mp) {
    fp_.validate();
    mp_.validate(sample_rate);
    window_ = hann_window(fp_.frame_length);
    bank_ = mel_filterbank(sample_rate, fp_.fft_size, mp_);
    dct_ = dct2_orthonormal(mp_.n_mels, mp_.n_coeffs);
  }

  Matrix mfcc(const AudioClip& clip) {
    check_rate(clip);
    const std::size_t frames = frame_count(clip.size(), fp_.frame_length, fp_.hop);
    if (frames == 0) throw DataError("clip shorter than one analysis frame");
    Matrix out{frames, mp_.n_coeffs, std::vector<double>(frames * mp_.n_coeffs)};
    std::vector<double> buf(fp_.fft_size, 0.0), power(fp_.fft_size / 2 + 1), logmel(mp_.n_mels);
    std::vector<std::complex<double>> spec;
    for (std::size_t f = 0; f < frames; ++f) {
      const double* x = clip.samples.data() + f * fp_.hop;
      for (std::size_t i = 0; i < fp_.frame_length; ++i) buf[i] = x[i] * window_[i];
      fft_.forward(buf, spec);
      for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
      for (std::size_t m = 0; m < mp_.n_mels; ++m) {
        double e = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k) e += bank_[m][k] * power[k];
        logmel[m] = std::log(std::max(e, mp_.log_floor));
      }
      for (std::size_t c = 0; c < mp_.n_coeffs; ++c) {
        double acc = 0.0;
        for (std::size_t m = 0; m < mp_.n_mels; ++m) acc += dct_[c][m] * logmel[m];
        out(f, c) = acc;
      }
    }
    return out;
  }

  /// Column means of the MFCC matrix, then frame-mean ZCR and RMSE.
  FeatureVector extract(const AudioClip& clip) {
    if (mp_.n_coeffs != kMfccCount) throw UsageError("feature vectors require exactly 40 MFCCs");
    const Matrix m = mfcc(clip);
    FeatureVector v{};
    for (std::size_t f = 0; f < m.rows; ++f) {
      for (std::size_t c = 0; c < m.cols; ++c) v[c] += m(f, c);
    }
    for (std::size_t c = 0; c < m.cols; ++c) v[c] /= static_cast<double>(m.rows);
    double z = 0.0, r = 0.0;
    for (std::size_t f = 0; f < m.rows; ++f) {
      std::span<const double> frame(clip.samples.data() + f * fp_.hop, fp_.frame_length);
      z += zcr(frame);
      r += rmse(frame);
    }
    v[kZcrIndex] = z / static_cast<double>(m.rows);
    v[kRmseIndex] = r / static_cast<double>(m.rows);
    return v;
  }

  const FrameParams& frame_params() const { return fp_; }
  const MfccParams& mfcc_params() const { return mp_; }

 private:
  void check_rate(const AudioClip& clip) const {
    if (clip.sample_rate != rate_) throw UsageError("clip sample rate does not match extractor");
  }

  int rate_;
  FrameParams fp_;
  MfccParams mp_;
  std::vector<double> window_;
  std::vector<std::vector<double>> bank_;
  std::vector<std::vector<double>> dct_;
  RealFft fft_;
};

inline Matrix mfcc(const AudioClip& clip, const FrameParams& fp = {}, const MfccParams& mp = {}) {
  return MfccExtractor(clip.sample_rate, fp, mp).mfcc(clip);
}

inline FeatureVector extract_features(const AudioClip& clip, const FrameParams& fp = {},
                                      const MfccParams& mp = {}) {
  return MfccExtractor(clip.sample_rate, fp, mp).extract(clip);
}

}  // namespace segaa::dsp

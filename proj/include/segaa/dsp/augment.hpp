#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "segaa/dsp/audio.hpp"
#include "segaa/dsp/spectral.hpp"

namespace segaa::dsp {

enum class Augmentation { Original, Noise, Stretch, Pitch, Shift };

inline std::string_view to_string(Augmentation a) {
  switch (a) {
    case Augmentation::Original: return "original";
    case Augmentation::Noise: return "noise";
    case Augmentation::Stretch: return "stretch";
    case Augmentation::Pitch: return "pitch";
    case Augmentation::Shift: return "shift";
  }
  return "?";
}

inline Augmentation parse_augmentation(std::string_view s) {
  for (auto a : {Augmentation::Original, Augmentation::Noise, Augmentation::Stretch,
                 Augmentation::Pitch, Augmentation::Shift}) {
    if (to_string(a) == s) return a;
  }
  throw UsageError("unknown augmentation '" + std::string(s) +
                   "' (expected original, noise, stretch, pitch or shift)");
}

struct AugmentParams {
  double noise_factor = 0.035;
  double stretch_rate = 0.8;
  double pitch_semitones = 2.0;
  std::int64_t shift_max = 5000;
  bool operator==(const AugmentParams&) const = default;
};

/// x + a * n with a = factor * U(0,1) * max|x| and n ~ U(-1,1) per sample.
inline AudioClip add_noise(const AudioClip& clip, double factor, std::uint64_t seed) {
  if (factor < 0.0) throw UsageError("noise factor must be non-negative");
  if (factor == 0.0) return clip;
  Rng rng(seed);
  const double amp = factor * rng.uniform() * peak_abs(clip.samples);
  AudioClip out = clip;
  for (double& v : out.samples) v += amp * rng.uniform(-1.0, 1.0);
  return out;
}

/// Circular rotation: out[(i + offset) mod n] = x[i].
inline AudioClip shift_signal(const AudioClip& clip, std::int64_t offset) {
  const auto n = static_cast<std::int64_t>(clip.size());
  if (n == 0) return clip;
  AudioClip out{std::vector<double>(clip.size()), clip.sample_rate};
  const std::int64_t k = ((offset % n) + n) % n;
  for (std::int64_t i = 0; i < n; ++i) out.samples[static_cast<std::size_t>((i + k) % n)] = clip.samples[static_cast<std::size_t>(i)];
  return out;
}

inline AudioClip shift_signal_random(const AudioClip& clip, std::int64_t max_offset, std::uint64_t seed) {
  Rng rng(seed);
  return shift_signal(clip, rng.between(-max_offset, max_offset));
}

namespace detail {

inline double wrap_phase(double p) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return p - two_pi * std::round(p / two_pi);
}

}  // namespace detail

/// Phase-vocoder time stretch. rate > 1 shortens, rate < 1 lengthens; output
/// has round(len / rate) samples at the same sample rate.
inline AudioClip time_stretch(const AudioClip& clip, double rate, const FrameParams& fp = {}) {
  if (!(rate > 0.0)) throw UsageError("time_stretch rate must be positive");
  fp.validate();
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(clip.size()) / rate));
  if (clip.samples.empty()) return clip;

  const Spectrogram s = stft_centered(clip.samples, fp);
  const std::size_t bins = s.bins;

  std::vector<double> advance(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    advance[k] = 2.0 * std::numbers::pi * static_cast<double>(fp.hop) * static_cast<double>(k) /
                 static_cast<double>(fp.fft_size);
  }

  auto column = [&](std::size_t f, std::size_t k) -> std::complex<double> {
    return f < s.frames ? s.at(f, k) : std::complex<double>{};
  };

  Spectrogram out;
  out.bins = bins;
  out.frames = static_cast<std::size_t>(std::ceil(static_cast<double>(s.frames) / rate));
  out.data.resize(out.frames * bins);

  std::vector<double> phase(bins);
  for (std::size_t k = 0; k < bins; ++k) phase[k] = std::arg(column(0, k));

  for (std::size_t t = 0; t < out.frames; ++t) {
    const double step = static_cast<double>(t) * rate;
    const auto f0 = static_cast<std::size_t>(step);
    const double alpha = step - static_cast<double>(f0);
    for (std::size_t k = 0; k < bins; ++k) {
      const auto a = column(f0, k);
      const auto b = column(f0 + 1, k);
      const double mag = (1.0 - alpha) * std::abs(a) + alpha * std::abs(b);
      out.at(t, k) = std::polar(mag, phase[k]);
      const double dphi = detail::wrap_phase(std::arg(b) - std::arg(a) - advance[k]);
      phase[k] += advance[k] + dphi;
    }
  }
  return {istft_centered(out, fp, out_len), clip.sample_rate};
}

/// Pitch shift by stretching the duration by 2^(semitones/12) and linearly
/// resampling back to the original length.
inline AudioClip pitch_shift(const AudioClip& clip, double semitones, const FrameParams& fp = {}) {
  const double factor = std::pow(2.0, semitones / 12.0);
  const AudioClip stretched = time_stretch(clip, 1.0 / factor, fp);
  return {resample_to_length(stretched.samples, clip.size()), clip.sample_rate};
}

/// Applies one augmentation with the configured parameters; `seed` drives the
/// random ones (noise amplitude, shift offset).
inline AudioClip augment(const AudioClip& clip, Augmentation kind, const AugmentParams& p,
                         std::uint64_t seed, const FrameParams& fp = {}) {
  switch (kind) {
    case Augmentation::Original: return clip;
    case Augmentation::Noise: return add_noise(clip, p.noise_factor, seed);
    case Augmentation::Stretch: return time_stretch(clip, p.stretch_rate, fp);
    case Augmentation::Pitch: return pitch_shift(clip, p.pitch_semitones, fp);
    case Augmentation::Shift: return shift_signal_random(clip, p.shift_max, seed);
  }
  return clip;
}

}  // namespace segaa::dsp

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "segaa/common.hpp"

namespace segaa::dsp {

/// Mono sample buffer plus its rate. Amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  bool operator==(const AudioClip&) const = default;
};

inline void validate(const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw DataError("audio clip has non-positive sample rate");
  for (double v : clip.samples) {
    if (!std::isfinite(v)) throw DataError("audio clip contains non-finite samples");
  }
}

inline double peak_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

/// Linear interpolation resampling of `x` to exactly `out_len` samples, with
/// output sample i read at input position i * (in_len / out_len).
inline std::vector<double> resample_to_length(std::span<const double> x, std::size_t out_len) {
  std::vector<double> out(out_len, 0.0);
  if (x.empty() || out_len == 0) return out;
  const double step = static_cast<double>(x.size()) / static_cast<double>(out_len);
  const std::size_t last = x.size() - 1;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto i0 = static_cast<std::size_t>(pos);
    if (i0 >= last) {
      out[i] = x[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out[i] = x[i0] + frac * (x[i0 + 1] - x[i0]);
  }
  return out;
}

inline AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw UsageError("target sample rate must be positive");
  if (target_rate == clip.sample_rate) return clip;
  const auto out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(clip.size()) * target_rate / static_cast<double>(clip.sample_rate)));
  return {resample_to_length(clip.samples, out_len), target_rate};
}

/// Center-crops or symmetrically zero-pads to round(duration * rate) samples.
/// An odd padding remainder goes to the right.
inline AudioClip pad_or_crop(const AudioClip& clip, double duration = 3.0) {
  if (!(duration > 0.0)) throw UsageError("pad_or_crop duration must be positive");
  const auto target = static_cast<std::size_t>(std::llround(duration * clip.sample_rate));
  const std::size_t n = clip.size();
  AudioClip out{std::vector<double>(target, 0.0), clip.sample_rate};
  if (n >= target) {
    const std::size_t start = (n - target) / 2;
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), target,
                out.samples.begin());
  } else {
    const std::size_t left = (target - n) / 2;
    std::copy(clip.samples.begin(), clip.samples.end(),
              out.samples.begin() + static_cast<std::ptrdiff_t>(left));
  }
  return out;
}

}  // namespace segaa::dsp

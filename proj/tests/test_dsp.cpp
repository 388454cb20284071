#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles/naive_mfcc.hpp"
#include "segaa/dsp/augment.hpp"
#include "segaa/dsp/features.hpp"
#include "segaa/dsp/wav.hpp"
#include "test_util.hpp"

using namespace segaa;
using namespace segaa::dsp;

namespace {

AudioClip sine(double hz, double seconds, int rate, double amp = 0.5) {
  AudioClip c{std::vector<double>(static_cast<std::size_t>(std::lround(seconds * rate))), rate};
  for (std::size_t i = 0; i < c.size(); ++i) c.samples[i] = amp * std::sin(2 * std::numbers::pi * hz * i / rate);
  return c;
}

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

/// RIFF/WAVE bytes with an arbitrary fmt chunk.
std::string wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                      const std::string& payload) {
  auto u32 = [](std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  auto u16 = [](std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>(v >> 8));
  };
  std::string s = "RIFF";
  u32(s, static_cast<std::uint32_t>(36 + payload.size()));
  s += "WAVEfmt ";
  u32(s, 16);
  u16(s, format);
  u16(s, channels);
  u32(s, rate);
  u32(s, rate * channels * bits / 8);
  u16(s, static_cast<std::uint16_t>(channels * bits / 8));
  u16(s, bits);
  s += "data";
  u32(s, static_cast<std::uint32_t>(payload.size()));
  return s + payload;
}

}  // namespace

TEST(Wav, SilenceRoundTripsAt16k) {
  const std::vector<double> zeros(1600, 0.0);
  const auto clip = decode_wav(bytes_of(encode_wav(zeros, 16000, 1, WavEncoding::Pcm16)));
  EXPECT_EQ(clip.sample_rate, 16000);
  ASSERT_EQ(clip.size(), 1600u);
  for (double v : clip.samples) EXPECT_EQ(v, 0.0);
}

TEST(Wav, SymmetricStereoAveragesToZero) {
  std::vector<double> inter;
  for (int i = 0; i < 100; ++i) {
    inter.push_back(0.5);
    inter.push_back(-0.5);
  }
  const auto clip = decode_wav(bytes_of(encode_wav(inter, 16000, 2, WavEncoding::Pcm16)));
  ASSERT_EQ(clip.size(), 100u);
  for (double v : clip.samples) EXPECT_EQ(v, 0.0);
}

TEST(Wav, Resampled440HzKeepsItsPeak) {
  const auto src = sine(440, 1.0, 48000);
  const auto path = test_util::temp_dir("wav48") / "a.wav";
  write_wav(path, src, WavEncoding::Pcm16);
  const auto clip = load_wav(path, 16000);
  EXPECT_EQ(clip.sample_rate, 16000);
  ASSERT_EQ(clip.size(), 16000u);
  EXPECT_NEAR(test_util::dominant_hz(clip.samples, 16000), 440.0, 1.0);
}

TEST(Wav, DecodesEveryPcmWidthAndFloat) {
  // 8-bit unsigned: 0 -> -1, 128 -> 0, 255 -> 127/128
  auto c8 = decode_wav(bytes_of(wav_bytes(1, 1, 8000, 8, std::string{'\x00', '\x80', '\xff'})));
  EXPECT_DOUBLE_EQ(c8.samples[0], -1.0);
  EXPECT_DOUBLE_EQ(c8.samples[1], 0.0);
  EXPECT_DOUBLE_EQ(c8.samples[2], 127.0 / 128.0);
  // 24-bit: 0x400000 = 0.5, -0x800000 = -1
  auto c24 = decode_wav(bytes_of(wav_bytes(1, 1, 8000, 24, std::string{'\x00', '\x00', '\x40', '\x00', '\x00', '\x80'})));
  EXPECT_DOUBLE_EQ(c24.samples[0], 0.5);
  EXPECT_DOUBLE_EQ(c24.samples[1], -1.0);
  // 32-bit int: 0x40000000 = 0.5
  auto c32 = decode_wav(bytes_of(wav_bytes(1, 1, 8000, 32, std::string{'\x00', '\x00', '\x00', '\x40'})));
  EXPECT_DOUBLE_EQ(c32.samples[0], 0.5);
  const std::vector<double> vals{0.25, -0.75, 1.0};
  auto cf = decode_wav(bytes_of(encode_wav(vals, 22050, 1, WavEncoding::Float32)));
  EXPECT_EQ(cf.sample_rate, 22050);
  EXPECT_EQ(cf.samples, vals);
}

TEST(Wav, ErrorKindsAreDistinct) {
  try {
    load_wav("/nonexistent/file.wav");
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::Unreadable);
  }
  try {
    decode_wav(bytes_of("RIFX0000WAVEjunk"));
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::MalformedHeader);
  }
  try {
    decode_wav(bytes_of(wav_bytes(2, 1, 8000, 4, std::string(8, '\0'))));  // MS ADPCM
    FAIL();
  } catch (const WavError& e) {
    EXPECT_EQ(e.kind(), WavErrorKind::UnsupportedEncoding);
  }
}

TEST(Audio, PadOrCropExamples) {
  AudioClip exact{std::vector<double>(48000, 0.25), 16000};
  EXPECT_EQ(pad_or_crop(exact).samples, exact.samples);

  AudioClip shortc{std::vector<double>(16000, 1.0), 16000};
  const auto padded = pad_or_crop(shortc);
  ASSERT_EQ(padded.size(), 48000u);
  for (std::size_t i = 0; i < 48000; ++i) EXPECT_EQ(padded.samples[i], (i >= 16000 && i < 32000) ? 1.0 : 0.0);

  AudioClip longc{std::vector<double>(64000), 16000};
  for (std::size_t i = 0; i < longc.size(); ++i) longc.samples[i] = static_cast<double>(i);
  const auto cropped = pad_or_crop(longc);
  ASSERT_EQ(cropped.size(), 48000u);
  EXPECT_EQ(cropped.samples.front(), 8000.0);
  EXPECT_EQ(cropped.samples.back(), 55999.0);

  AudioClip empty{{}, 16000};
  const auto fromempty = pad_or_crop(empty, 0.5);
  EXPECT_EQ(fromempty.size(), 8000u);
}

TEST(Augment, NoiseProperties) {
  const auto x = sine(300, 0.25, 16000);
  EXPECT_EQ(add_noise(x, 0.0, 1).samples, x.samples);
  AudioClip silent{std::vector<double>(4000, 0.0), 16000};
  EXPECT_EQ(add_noise(silent, 0.5, 3).samples, silent.samples);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto y = add_noise(x, 0.035, seed);
    double dev = 0;
    for (std::size_t i = 0; i < x.size(); ++i) dev = std::max(dev, std::abs(y.samples[i] - x.samples[i]));
    EXPECT_LE(dev, 0.035 * peak_abs(x.samples));
  }
  EXPECT_EQ(add_noise(x, 0.035, 9).samples, add_noise(x, 0.035, 9).samples);
  EXPECT_THROW(add_noise(x, -1.0, 0), UsageError);
}

TEST(Augment, ShiftIsCircular) {
  AudioClip x{{1, 2, 3, 4}, 16000};
  EXPECT_EQ(shift_signal(x, 1).samples, (std::vector<double>{4, 1, 2, 3}));
  EXPECT_EQ(shift_signal(x, 0).samples, x.samples);
  EXPECT_EQ(shift_signal(x, 4).samples, x.samples);
  EXPECT_EQ(shift_signal(x, -1).samples, (std::vector<double>{2, 3, 4, 1}));
  const auto s = sine(123, 0.3, 16000);
  for (std::int64_t k : {-5000, -17, 3, 4999, 100000}) {
    EXPECT_EQ(shift_signal(shift_signal(s, k), -k).samples, s.samples);
    EXPECT_NEAR(rmse(shift_signal(s, k).samples), rmse(s.samples), 1e-12);
  }
}

TEST(Augment, TimeStretchLengthsAndPitch) {
  const auto x = sine(440, 3.0, 16000);
  EXPECT_EQ(time_stretch(x, 1.0).size(), x.size());
  const auto y = time_stretch(x, 0.8);
  EXPECT_EQ(y.size(), 60000u);
  EXPECT_EQ(y.sample_rate, 16000);
  // 2 bins of a 60000-point DFT at 16 kHz
  EXPECT_NEAR(test_util::dominant_hz(y.samples, 16000), 440.0, 2 * 16000.0 / 60000.0);
  EXPECT_THROW(time_stretch(x, 0.0), UsageError);
  EXPECT_THROW(time_stretch(x, -1.0), UsageError);
}

TEST(Augment, TimeStretchUnitRateIsNearIdentity) {
  const auto x = sine(440, 1.0, 16000);
  const auto y = time_stretch(x, 1.0);
  double dev = 0;
  for (std::size_t i = 0; i < x.size(); ++i) dev = std::max(dev, std::abs(y.samples[i] - x.samples[i]));
  EXPECT_LE(dev, 1e-9);
}

TEST(Augment, PitchShift) {
  const auto x = sine(440, 1.0, 16000);
  const auto same = pitch_shift(x, 0.0);
  ASSERT_EQ(same.size(), x.size());
  double dev = 0;
  for (std::size_t i = 0; i < x.size(); ++i) dev = std::max(dev, std::abs(same.samples[i] - x.samples[i]));
  EXPECT_LE(dev, 1e-3);
  const auto up = pitch_shift(x, 12.0);
  ASSERT_EQ(up.size(), x.size());
  EXPECT_NEAR(test_util::dominant_hz(up.samples, 16000), 880.0, 2.0);
  const auto down = pitch_shift(x, -12.0);
  EXPECT_NEAR(test_util::dominant_hz(down.samples, 16000), 220.0, 2.0);
  EXPECT_EQ(pitch_shift(x, 2.0).size(), x.size());
}

TEST(Spectral, StftRoundTrip) {
  const auto x = sine(700, 0.5, 16000);
  FrameParams fp;
  const auto s = stft_centered(x.samples, fp);
  const auto y = istft_centered(s, fp, x.size());
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(y[i], x.samples[i], 1e-9);
}

TEST(Spectral, FrameCountFormula) {
  EXPECT_EQ(frame_count(48000, 2048, 512), 90u);
  EXPECT_EQ(frame_count(2047, 2048, 512), 0u);
  for (std::size_t n = 2048; n < 6000; n += 37) EXPECT_EQ(frame_count(n, 2048, 512), 1 + (n - 2048) / 512);
  EXPECT_THROW((FrameParams{1024, 2048, 2048}.validate()), UsageError);
  EXPECT_THROW((FrameParams{2048, 512, 1000}.validate()), UsageError);
}

TEST(Features, ZcrExamplesAndErrors) {
  EXPECT_EQ(zcr(std::vector<double>{1, 1, 1, 1}), 0.0);
  EXPECT_EQ(zcr(std::vector<double>{1, -1, 1, -1}), 1.0);
  EXPECT_EQ(zcr(std::vector<double>{0.3, -0.2, -0.1, 0.4, 0.5}), 0.5);
  EXPECT_EQ(zcr(std::vector<double>{0, -1}), 1.0);  // zero counts as non-negative
  EXPECT_THROW(zcr(std::vector<double>{1}), UsageError);
}

TEST(Features, RmseExamplesAndErrors) {
  EXPECT_EQ(rmse(std::vector<double>(10, 0.0)), 0.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>(7, -0.3)), 0.3);
  EXPECT_NEAR(rmse(std::vector<double>{3, -4}), 3.53553, 1e-5);
  EXPECT_THROW(rmse(std::vector<double>{}), UsageError);
}

TEST(Features, ZcrAndRmseProperties) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(2 + rng.below(300));
    for (double& v : x) {
      v = rng.uniform(-1, 1);
      if (v == 0.0) v = 0.5;
    }
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    const double z = zcr(x);
    EXPECT_GE(z, 0.0);
    EXPECT_LE(z, 1.0);
    EXPECT_EQ(z, zcr(neg));
    EXPECT_EQ(z, oracle::zcr(x));
    EXPECT_EQ(rmse(x), oracle::rmse(x));
    const double a = rng.uniform(-3, 3);
    std::vector<double> ax(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ax[i] = a * x[i];
    EXPECT_NEAR(rmse(ax), std::abs(a) * rmse(x), 1e-12);
  }
}

TEST(Features, FilterbankAndDctShape) {
  const auto bank = mel_filterbank(16000, 2048, {});
  ASSERT_EQ(bank.size(), 64u);
  for (const auto& f : bank) {
    ASSERT_EQ(f.size(), 1025u);
    EXPECT_LE(*std::max_element(f.begin(), f.end()), 1.0);
    EXPECT_GT(*std::max_element(f.begin(), f.end()), 0.5);
  }
  const auto d = dct2_orthonormal(64, 64);
  for (std::size_t a = 0; a < 64; ++a)
    for (std::size_t b = 0; b < 64; ++b) {
      double dot = 0;
      for (std::size_t n = 0; n < 64; ++n) dot += d[a][n] * d[b][n];
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-12);
    }
  EXPECT_NEAR(hz_to_mel(mel_to_hz(1234.5)), 1234.5, 1e-9);
}

TEST(Features, SilenceMfcc) {
  AudioClip silent{std::vector<double>(48000, 0.0), 16000};
  const auto m = mfcc(silent);
  ASSERT_EQ(m.rows, 90u);
  ASSERT_EQ(m.cols, 40u);
  const double c0 = std::sqrt(64.0) * std::log(1e-10);
  for (std::size_t f = 0; f < m.rows; ++f) {
    EXPECT_NEAR(m(f, 0), c0, 1e-9);
    for (std::size_t c = 1; c < 40; ++c) EXPECT_NEAR(m(f, c), 0.0, 1e-9);
  }
  const auto v = extract_features(silent);
  EXPECT_NEAR(v[0], c0, 1e-9);
  for (std::size_t c = 1; c < 42; ++c) EXPECT_NEAR(v[c], 0.0, 1e-9);
}

TEST(Features, MfccMatchesNaiveDftOracle) {
  const auto x = sine(440, 0.25, 16000);
  const auto m = mfcc(x);
  const auto ref = oracle::mfcc(x.samples, {});
  ASSERT_EQ(m.rows, ref.size());
  for (std::size_t f = 0; f < m.rows; ++f)
    for (std::size_t c = 0; c < 40; ++c) ASSERT_NEAR(m(f, c), ref[f][c], 1e-6) << f << "," << c;
  const auto v = extract_features(x);
  const auto rv = oracle::features(x.samples, {});
  for (std::size_t i = 0; i < 42; ++i) EXPECT_NEAR(v[i], rv[i], 1e-6) << i;
}

TEST(Features, ExtractionIsDeterministicAndBounded) {
  Rng rng(5);
  AudioClip x{std::vector<double>(20000), 16000};
  for (double& v : x.samples) v = rng.uniform(-0.9, 0.9);
  const auto a = extract_features(x), b = extract_features(x);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 42u);
  for (double v : a) EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(a[kZcrIndex], 0.0);
  EXPECT_LE(a[kZcrIndex], 1.0);
  EXPECT_GE(a[kRmseIndex], 0.0);
}

TEST(Features, ErrorsOnShortClipAndBadParams) {
  AudioClip tiny{std::vector<double>(100, 0.1), 16000};
  EXPECT_THROW(mfcc(tiny), DataError);
  MfccParams bad;
  bad.n_coeffs = 70;
  EXPECT_THROW(MfccExtractor(16000, {}, bad), UsageError);
  MfccParams hi;
  hi.fmax = 9000;
  EXPECT_THROW(MfccExtractor(16000, {}, hi), UsageError);
}

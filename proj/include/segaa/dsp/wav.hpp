#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "segaa/dsp/audio.hpp"

namespace segaa::dsp {

enum class WavErrorKind { Unreadable, MalformedHeader, UnsupportedEncoding };

class WavError : public DataError {
 public:
  WavError(WavErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
  WavErrorKind kind() const { return kind_; }

 private:
  WavErrorKind kind_;
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

/// Decodes an in-memory RIFF/WAVE image. Channels are averaged to mono and
/// integer PCM is scaled to [-1, 1]. No resampling.
inline AudioClip decode_wav(const std::vector<unsigned char>& bytes, const std::string& name = "<memory>") {
  using detail::read_u16;
  using detail::read_u32;
  auto malformed = [&](const std::string& why) {
    return WavError(WavErrorKind::MalformedHeader, name + ": malformed WAV header: " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw malformed("missing RIFF/WAVE signature");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || body + len > bytes.size()) throw malformed("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      block_align = read_u16(f + 12);
      bits = read_u16(f + 14);
      if (format == 0xFFFE) {
        if (len < 40) throw malformed("truncated WAVE_FORMAT_EXTENSIBLE fmt chunk");
        format = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Some writers leave the data length unset (0 or 0xFFFFFFFF) for streams.
      data_len = std::min<std::size_t>(len, bytes.size() - body);
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw malformed("no fmt chunk");
  if (data == nullptr) throw malformed("no data chunk");
  if (channels == 0 || rate == 0) throw malformed("zero channels or sample rate");

  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) {
    throw WavError(WavErrorKind::UnsupportedEncoding,
                   name + ": unsupported WAV encoding format tag " + std::to_string(format));
  }
  if ((format == 1 && bits != 8 && bits != 16 && bits != 24 && bits != 32) ||
      (is_float && bits != 32)) {
    throw WavError(WavErrorKind::UnsupportedEncoding,
                   name + ": unsupported bit depth " + std::to_string(bits));
  }
  const std::size_t bytes_per_sample = bits / 8;
  if (block_align != bytes_per_sample * channels) throw malformed("inconsistent block alignment");

  const std::size_t frames = data_len / block_align;
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * block_align + c * bytes_per_sample;
      double v = 0.0;
      if (is_float) {
        v = static_cast<double>(std::bit_cast<float>(read_u32(p)));
      } else if (bits == 8) {
        v = (static_cast<double>(p[0]) - 128.0) / 128.0;
      } else if (bits == 16) {
        v = static_cast<double>(static_cast<std::int16_t>(read_u16(p))) / 32768.0;
      } else if (bits == 24) {
        std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (s & 0x800000) s -= 0x1000000;
        v = static_cast<double>(s) / 8388608.0;
      } else {
        v = static_cast<double>(static_cast<std::int32_t>(read_u32(p))) / 2147483648.0;
      }
      acc += v;
    }
    clip.samples[i] = acc / channels;
  }
  validate(clip);
  return clip;
}

/// Reads a PCM WAV file, mixes to mono and linearly resamples to target_rate.
inline AudioClip load_wav(const std::filesystem::path& path, int target_rate = 16000) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavErrorKind::Unreadable, "cannot open WAV file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw WavError(WavErrorKind::Unreadable, "error reading WAV file " + path.string());
  AudioClip clip = decode_wav(bytes, path.string());
  if (clip.samples.empty()) {
    throw WavError(WavErrorKind::MalformedHeader, path.string() + ": WAV file has no samples");
  }
  return resample(clip, target_rate);
}

enum class WavEncoding { Pcm16, Float32 };

/// Encodes mono (channels == 1) or interleaved multi-channel samples.
inline std::string encode_wav(std::span<const double> interleaved, int sample_rate, int channels = 1,
                              WavEncoding enc = WavEncoding::Float32) {
  const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const auto data_len = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));
  std::string s;
  s.reserve(44 + data_len);
  s += "RIFF";
  detail::put_u32(s, 36 + data_len);
  s += "WAVEfmt ";
  detail::put_u32(s, 16);
  detail::put_u16(s, enc == WavEncoding::Pcm16 ? 1 : 3);
  detail::put_u16(s, static_cast<std::uint16_t>(channels));
  detail::put_u32(s, static_cast<std::uint32_t>(sample_rate));
  detail::put_u32(s, static_cast<std::uint32_t>(sample_rate) * block);
  detail::put_u16(s, block);
  detail::put_u16(s, bits);
  s += "data";
  detail::put_u32(s, data_len);
  for (double v : interleaved) {
    if (enc == WavEncoding::Pcm16) {
      const double c = std::clamp(v, -1.0, 32767.0 / 32768.0);
      detail::put_u16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32768.0))));
    } else {
      detail::put_u32(s, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return s;
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip,
                      WavEncoding enc = WavEncoding::Float32) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write WAV file " + path.string());
  const std::string bytes = encode_wav(clip.samples, clip.sample_rate, 1, enc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("error writing WAV file " + path.string());
}

}  // namespace segaa::dsp

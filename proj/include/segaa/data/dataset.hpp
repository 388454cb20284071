#pragma once

#include <algorithm>
#include <filesystem>
#include <numbers>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "segaa/data/corpus.hpp"
#include "segaa/dsp/augment.hpp"
#include "segaa/dsp/features.hpp"
#include "segaa/dsp/wav.hpp"

namespace segaa::data {

using dsp::Augmentation;
using dsp::FeatureVector;

/// One feature row with its labels and provenance.
struct LabeledExample {
  FeatureVector features{};
  Labels labels;
  std::string clip;  // source-unique clip name (filename stem)
  std::string speaker_id;
  Source source = Source::Synthetic;
  Augmentation augmentation = Augmentation::Original;

  /// Stable row identifier, e.g. "1001_DFA_ANG_XX#noise".
  std::string id() const { return clip + "#" + std::string(dsp::to_string(augmentation)); }
  /// Key shared by a clip and all its augmented variants.
  std::string group() const { return std::string(to_string(source)) + "/" + clip; }
  bool operator==(const LabeledExample&) const = default;
};

/// Feature extraction settings shared by build, train and predict.
struct DspConfig {
  int sample_rate = 16000;
  double duration = 3.0;
  dsp::FrameParams frame;
  dsp::MfccParams mfcc;
  dsp::AugmentParams augment;
  bool operator==(const DspConfig&) const = default;
};

/// A clip whose labels are known, backed either by a file or by memory.
struct CorpusItem {
  Source source = Source::Synthetic;
  std::string name;
  std::string speaker_id;
  Labels labels;
  std::variant<std::filesystem::path, dsp::AudioClip> audio;
};

struct CorpusRoot {
  Source type = Source::CremaD;
  std::filesystem::path root;
  std::filesystem::path demographics;  // CREMA-D only; defaults to <root>/VideoDemographics.csv
  bool operator==(const CorpusRoot&) const = default;
};

struct CorpusScan {
  std::vector<CorpusItem> items;
  std::vector<std::string> errors;
  std::size_t skipped_boredom = 0;
};

/// Lists the WAV files under a corpus root and parses their labels.
/// Per-file parse errors are collected in the result.
inline CorpusScan scan_corpus(const CorpusRoot& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root.root, ec)) throw DataError("corpus root not readable: " + root.root.string());
  if (root.type == Source::Synthetic) throw UsageError("synthetic corpora are generated, not scanned");

  SpeakerTable speakers;
  if (root.type == Source::CremaD) {
    fs::path demo = root.demographics.empty() ? root.root / "VideoDemographics.csv" : root.demographics;
    speakers = load_demographics(demo);
  } else {
    speakers = emodb_speakers();
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root.root)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  CorpusScan scan;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    try {
      if (root.type == Source::CremaD) {
        auto p = parse_crema(name, speakers);
        scan.items.push_back({Source::CremaD, f.stem().string(), p.speaker_id, p.labels, f});
      } else {
        auto p = parse_emodb(name, speakers);
        if (!p) {
          ++scan.skipped_boredom;
          continue;
        }
        scan.items.push_back({Source::EmoDb, f.stem().string(), p->speaker_id, p->labels, f});
      }
    } catch (const DataError& e) {
      scan.errors.push_back(e.what());
    }
  }
  return scan;
}

struct SynthClip {
  std::string name;
  std::string speaker_id;
  Labels labels;
  dsp::AudioClip clip;
};

/// Harmonic tone mixtures whose spectra encode the labels: the fundamental
/// encodes gender, the harmonic count encodes emotion, and an amplitude-
/// modulated partial whose frequency and modulation rate encode the age bin.
inline std::vector<SynthClip> synth_corpus(std::size_t n_per_class, std::uint64_t seed, int sample_rate = 16000) {
  if (n_per_class == 0) throw UsageError("synthetic corpus needs n_per_class >= 1");
  std::vector<SynthClip> out;
  out.reserve(n_per_class * 72);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::size_t index = 0;
  for (int e = 0; e < 6; ++e) {
    for (int g = 0; g < 2; ++g) {
      for (int a = 0; a < 6; ++a) {
        for (std::size_t k = 0; k < n_per_class; ++k, ++index) {
          Rng rng(derive_seed(seed, index));
          const double f0 = (g == 0 ? 210.0 : 120.0) * (1.0 + rng.uniform(-0.04, 0.04));
          const double dur = rng.uniform(2.2, 3.0);
          const auto n = static_cast<std::size_t>(dur * sample_rate);
          const int harmonics = e + 1;
          std::vector<double> phases(static_cast<std::size_t>(harmonics));
          for (auto& p : phases) p = rng.uniform(0.0, two_pi);
          const double age_freq = (1100.0 + 420.0 * a) * (1.0 + rng.uniform(-0.01, 0.01));
          const double am_rate = 2.0 + 1.5 * a;
          const double age_phase = rng.uniform(0.0, two_pi);

          std::vector<double> x(n);
          for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / sample_rate;
            double v = 0.0;
            for (int h = 1; h <= harmonics; ++h) {
              v += std::sin(two_pi * f0 * h * t + phases[static_cast<std::size_t>(h - 1)]) / h;
            }
            v += 0.25 * (1.0 + 0.5 * std::sin(two_pi * am_rate * t)) * std::sin(two_pi * age_freq * t + age_phase);
            v += 0.01 * rng.uniform(-1.0, 1.0);
            x[i] = v;
          }
          const double level = rng.uniform(0.4, 0.8) / std::max(dsp::peak_abs(x), 1e-12);
          for (double& v : x) v *= level;

          SynthClip c;
          c.name = "synth_" + std::to_string(index);
          c.speaker_id = "syn" + std::to_string(index);
          c.labels = {e, g, a};
          c.clip = {std::move(x), sample_rate};
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

inline std::vector<CorpusItem> synth_items(std::vector<SynthClip> clips) {
  std::vector<CorpusItem> items;
  items.reserve(clips.size());
  for (auto& c : clips) {
    items.push_back({Source::Synthetic, c.name, c.speaker_id, c.labels, std::move(c.clip)});
  }
  return items;
}

/// Writes the clips as float WAVs plus a labels.csv ground-truth table.
inline void write_synth_corpus(const std::vector<SynthClip>& clips, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream labels(dir / "labels.csv");
  if (!labels) throw DataError("cannot write " + (dir / "labels.csv").string());
  labels << "file,speaker_id,emotion,gender,age_bin\n";
  for (const auto& c : clips) {
    dsp::write_wav(dir / (c.name + ".wav"), c.clip);
    labels << c.name << ".wav," << c.speaker_id << ',' << kEmotions[c.labels.emotion] << ','
           << kGenders[c.labels.gender] << ',' << kAgeBins[c.labels.age_bin] << '\n';
  }
}

/// Feature extraction for one clip: pad/crop to the configured duration first.
inline FeatureVector clip_features(const dsp::AudioClip& clip, const DspConfig& cfg, dsp::MfccExtractor& ex) {
  FeatureVector v = ex.extract(dsp::pad_or_crop(clip, cfg.duration));
  // Storage precision is float; quantising here makes the store round trip exact.
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  return v;
}

struct BuildResult {
  std::vector<LabeledExample> examples;
  std::vector<std::string> errors;
};

/// Original plus every enabled augmentation of each clip, ordered by
/// (source, clip name, augmentation). Unreadable files are reported, not fatal.
inline BuildResult build_dataset(std::vector<CorpusItem> items, const DspConfig& cfg,
                                 std::vector<Augmentation> augmentations, std::uint64_t seed) {
  if (items.empty()) throw DataError("corpus is empty");
  std::sort(items.begin(), items.end(), [](const CorpusItem& a, const CorpusItem& b) {
    return std::tie(a.source, a.name) < std::tie(b.source, b.name);
  });
  std::erase(augmentations, Augmentation::Original);
  std::sort(augmentations.begin(), augmentations.end());
  augmentations.erase(std::unique(augmentations.begin(), augmentations.end()), augmentations.end());

  dsp::MfccExtractor ex(cfg.sample_rate, cfg.frame, cfg.mfcc);
  BuildResult r;
  for (const auto& item : items) {
    dsp::AudioClip clip;
    try {
      if (const auto* path = std::get_if<std::filesystem::path>(&item.audio)) {
        clip = dsp::load_wav(*path, cfg.sample_rate);
      } else {
        clip = dsp::resample(std::get<dsp::AudioClip>(item.audio), cfg.sample_rate);
      }
      dsp::validate(clip);
    } catch (const DataError& e) {
      r.errors.push_back(e.what());
      continue;
    }
    auto push = [&](Augmentation aug, const dsp::AudioClip& c) {
      r.examples.push_back({clip_features(c, cfg, ex), item.labels, item.name, item.speaker_id, item.source, aug});
    };
    push(Augmentation::Original, clip);
    for (auto aug : augmentations) {
      const std::uint64_t s =
          derive_seed(seed, hash_string(std::string(to_string(item.source)) + "/" + item.name + "#" +
                                        std::string(dsp::to_string(aug))));
      push(aug, dsp::augment(clip, aug, cfg.augment, s, cfg.frame));
    }
  }
  if (r.examples.empty()) throw DataError("no clip in the corpus could be decoded");
  return r;
}

}  // namespace segaa::data

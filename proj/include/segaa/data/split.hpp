#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "segaa/data/dataset.hpp"

namespace segaa::data {

struct SplitFractions {
  double train = 0.70, val = 0.15, test = 0.15;
  bool operator==(const SplitFractions&) const = default;
};

struct SplitSet {
  std::vector<LabeledExample> train, val, test;
  std::uint64_t seed = 0;
  bool joint_strata = false;  // false when the emotion-only fallback was used
};

/// Splits whole clips (original plus its augmented variants) so no variant of
/// a val/test clip leaks into train. Strata are the joint (emotion, gender,
/// age) key when every stratum has at least 3 clips, else emotion alone.
inline SplitSet stratified_split(const std::vector<LabeledExample>& examples, SplitFractions fr,
                                 std::uint64_t seed) {
  if (examples.empty()) throw DataError("cannot split an empty dataset");
  if (fr.train < 0 || fr.val < 0 || fr.test < 0 || std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9) {
    throw UsageError("split fractions must be non-negative and sum to 1");
  }

  // Clip groups in first-appearance order, with the group's labels.
  std::map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> members;
  std::vector<Labels> group_labels;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto [it, fresh] = group_of.try_emplace(examples[i].group(), members.size());
    if (fresh) {
      members.emplace_back();
      group_labels.push_back(examples[i].labels);
    }
    members[it->second].push_back(i);
    if (examples[i].augmentation == Augmentation::Original) group_labels[it->second] = examples[i].labels;
  }

  auto joint_key = [](const Labels& l) { return (l.emotion * 2 + l.gender) * 6 + l.age_bin; };
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t g = 0; g < members.size(); ++g) strata[joint_key(group_labels[g])].push_back(g);
  bool joint = std::all_of(strata.begin(), strata.end(), [](const auto& s) { return s.second.size() >= 3; });
  if (!joint) {
    strata.clear();
    for (std::size_t g = 0; g < members.size(); ++g) strata[group_labels[g].emotion].push_back(g);
  }

  const std::array<double, 3> f{fr.train, fr.val, fr.test};
  std::vector<int> assign(members.size(), 0);
  Rng rng(seed);
  std::array<std::size_t, 3> extras{};
  for (auto& [key, groups] : strata) {
    rng.shuffle(groups);
    const auto n = static_cast<double>(groups.size());
    std::array<std::size_t, 3> count{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      const double exact = f[s] * n;
      count[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      frac[s] = exact - static_cast<double>(count[s]);
      used += count[s];
    }
    // Largest fractional remainders first; ties go to the split that has
    // received the fewest rounding extras so far.
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (std::abs(frac[a] - frac[b]) > 1e-9) return frac[a] > frac[b];
      if (extras[a] != extras[b]) return extras[a] < extras[b];
      return a < b;
    });
    for (std::size_t r = 0; used < groups.size(); ++r, ++used) {
      ++count[order[r % 3]];
      ++extras[order[r % 3]];
    }
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t j = 0; j < count[s]; ++j) assign[groups[pos++]] = s;
    }
  }

  SplitSet out;
  out.seed = seed;
  out.joint_strata = joint;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int s = assign[group_of.at(examples[i].group())];
    (s == 0 ? out.train : s == 1 ? out.val : out.test).push_back(examples[i]);
  }
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw DataError("dataset too small to populate train, validation and test splits");
  }
  return out;
}

/// Per-feature z-scoring fitted on the training split.
struct Standardizer {
  std::array<double, dsp::kFeatureDim> mean{};
  std::array<double, dsp::kFeatureDim> stddev{};

  FeatureVector apply(const FeatureVector& x) const {
    FeatureVector y;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean[i]) / stddev[i];
    return y;
  }
  FeatureVector invert(const FeatureVector& y) const {
    FeatureVector x;
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] * stddev[i] + mean[i];
    return x;
  }
  bool operator==(const Standardizer&) const = default;
};

/// Population statistics; std below 1e-8 is replaced by 1.
inline Standardizer fit_standardizer(const std::vector<LabeledExample>& train) {
  if (train.empty()) throw DataError("cannot fit a standardizer on an empty training set");
  Standardizer s;
  const auto n = static_cast<double>(train.size());
  for (const auto& e : train) {
    for (std::size_t i = 0; i < dsp::kFeatureDim; ++i) s.mean[i] += e.features[i];
  }
  for (auto& m : s.mean) m /= n;
  std::array<double, dsp::kFeatureDim> var{};
  for (const auto& e : train) {
    for (std::size_t i = 0; i < dsp::kFeatureDim; ++i) {
      const double d = e.features[i] - s.mean[i];
      var[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < dsp::kFeatureDim; ++i) {
    const double sd = std::sqrt(var[i] / n);
    s.stddev[i] = sd < 1e-8 ? 1.0 : sd;
  }
  return s;
}

inline std::vector<LabeledExample> apply_standardizer(const Standardizer& s, std::vector<LabeledExample> examples) {
  for (auto& e : examples) e.features = s.apply(e.features);
  return examples;
}

}  // namespace segaa::data

#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segaa/common.hpp"

namespace segaa::data {

enum class Target { Emotion, Gender, Age };

inline constexpr std::array<Target, 3> kAllTargets{Target::Emotion, Target::Gender, Target::Age};

inline constexpr std::array<std::string_view, 6> kEmotions{"anger",      "disgust", "fear",
                                                           "happiness", "neutrality", "sadness"};
inline constexpr std::array<std::string_view, 2> kGenders{"female", "male"};
inline constexpr std::array<std::string_view, 6> kAgeBins{"twenties", "thirties", "forties",
                                                          "fifties",  "sixties",  "seventies"};

inline std::string_view to_string(Target t) {
  switch (t) {
    case Target::Emotion: return "emotion";
    case Target::Gender: return "gender";
    case Target::Age: return "age";
  }
  return "?";
}

inline Target parse_target(std::string_view s) {
  for (auto t : kAllTargets) {
    if (to_string(t) == s) return t;
  }
  throw UsageError("unknown target '" + std::string(s) + "' (expected emotion, gender or age)");
}

inline std::size_t cardinality(Target t) {
  switch (t) {
    case Target::Emotion: return kEmotions.size();
    case Target::Gender: return kGenders.size();
    case Target::Age: return kAgeBins.size();
  }
  return 0;
}

inline std::span<const std::string_view> class_names(Target t) {
  switch (t) {
    case Target::Emotion: return kEmotions;
    case Target::Gender: return kGenders;
    case Target::Age: return kAgeBins;
  }
  return {};
}

inline int class_index(Target t, std::string_view name) {
  const auto names = class_names(t);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw DataError("unknown " + std::string(to_string(t)) + " class '" + std::string(name) + "'");
}

/// Canonical orderings; one-hot columns and confusion axes follow them.
struct LabelSchema {
  std::vector<std::string> emotions{kEmotions.begin(), kEmotions.end()};
  std::vector<std::string> genders{kGenders.begin(), kGenders.end()};
  std::vector<std::string> age_bins{kAgeBins.begin(), kAgeBins.end()};

  bool is_canonical() const { return *this == LabelSchema{}; }
  bool operator==(const LabelSchema&) const = default;
};

/// The three label indices of one clip.
struct Labels {
  int emotion = 0;
  int gender = 0;
  int age_bin = 0;

  int get(Target t) const {
    switch (t) {
      case Target::Emotion: return emotion;
      case Target::Gender: return gender;
      case Target::Age: return age_bin;
    }
    return 0;
  }
  bool valid() const {
    return emotion >= 0 && emotion < 6 && gender >= 0 && gender < 2 && age_bin >= 0 && age_bin < 6;
  }
  bool operator==(const Labels&) const = default;
};

template <typename T = double>
std::vector<T> one_hot(int index, std::size_t cardinality) {
  if (index < 0 || static_cast<std::size_t>(index) >= cardinality) {
    throw UsageError("one_hot index " + std::to_string(index) + " out of range for cardinality " +
                     std::to_string(cardinality));
  }
  std::vector<T> v(cardinality, T(0));
  v[static_cast<std::size_t>(index)] = T(1);
  return v;
}

}  // namespace segaa::data

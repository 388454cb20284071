#pragma once

#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "segaa/models/architectures.hpp"

namespace segaa::models {

/// Three single-target stages; each stage after the first sees the features
/// plus the one-hot prediction of the stage before it.
struct CascadeSpec {
  std::array<Target, 3> order{Target::Emotion, Target::Gender, Target::Age};
  ModelKind stage_kind = ModelKind::SegaaIndividual;
  bool forward_all = false;  // stage 3 also sees stage 1's prediction

  void validate() const {
    const bool perm = order[0] != order[1] && order[1] != order[2] && order[0] != order[2];
    if (!perm) throw UsageError("cascade order must be a permutation of emotion, gender, age");
    if (!is_individual(stage_kind)) throw UsageError("cascade stages must use an individual model kind");
  }

  /// Targets whose predictions feed stage `stage` (0-based).
  std::vector<Target> upstream(std::size_t stage) const {
    if (stage == 0) return {};
    if (stage == 1 || !forward_all) return {order[stage - 1]};
    return {order[0], order[1]};
  }

  /// e.g. "cascade_segaa_emotion-gender-age".
  std::string name() const {
    std::ostringstream o;
    o << "cascade_" << to_string(family(stage_kind)) << '_' << data::to_string(order[0]) << '-'
      << data::to_string(order[1]) << '-' << data::to_string(order[2]);
    if (forward_all) o << "_all";
    return o.str();
  }
  bool operator==(const CascadeSpec&) const = default;
};

/// Parses "emotion,gender,age".
inline std::array<Target, 3> parse_order(const std::string& s) {
  std::array<Target, 3> out{};
  std::size_t n = 0, start = 0;
  while (true) {
    const auto comma = s.find_first_of(",>-", start);
    const std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (n == 3) throw UsageError("cascade order '" + s + "' must name exactly three targets");
    out[n++] = data::parse_target(tok);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (n != 3) throw UsageError("cascade order '" + s + "' must name exactly three targets");
  CascadeSpec{out}.validate();
  return out;
}

inline std::size_t stage_input_width(const CascadeSpec& c, std::size_t stage) {
  std::size_t w = dsp::kFeatureDim;
  for (Target t : c.upstream(stage)) w += data::cardinality(t);
  return w;
}

/// Stage specs with input widths 42, 42 + |C1|, 42 + |C2|. For convolutional
/// stages the one-hot extends the length axis.
inline std::array<NetworkSpec, 3> build_cascade(const CascadeSpec& c) {
  c.validate();
  std::array<NetworkSpec, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = build_model(c.stage_kind, {c.order[i]}, stage_input_width(c, i));
    out[i].name = c.name() + "_stage" + std::to_string(i + 1);
  }
  return out;
}

}  // namespace segaa::models

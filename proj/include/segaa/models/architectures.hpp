#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "segaa/data/labels.hpp"
#include "segaa/dsp/features.hpp"
#include "segaa/nn/network.hpp"
#include "segaa/optim/optimizers.hpp"

namespace segaa::models {

using data::Target;
using nn::LayerSpec;
using nn::NetworkSpec;

enum class ModelKind { MlpIndividual, MlpMulti, Segaa0Individual, Segaa0Multi, SegaaIndividual, SegaaMulti };
enum class Family { Mlp, Segaa0, Segaa };

inline constexpr std::array<ModelKind, 6> kAllKinds{ModelKind::MlpIndividual,    ModelKind::MlpMulti,
                                                    ModelKind::Segaa0Individual, ModelKind::Segaa0Multi,
                                                    ModelKind::SegaaIndividual,  ModelKind::SegaaMulti};

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::MlpIndividual: return "mlp_individual";
    case ModelKind::MlpMulti: return "mlp_multi";
    case ModelKind::Segaa0Individual: return "segaa0_individual";
    case ModelKind::Segaa0Multi: return "segaa0_multi";
    case ModelKind::SegaaIndividual: return "segaa_individual";
    case ModelKind::SegaaMulti: return "segaa_multi";
  }
  return "?";
}

inline std::string valid_kind_list() {
  std::string s;
  for (auto k : kAllKinds) s += (s.empty() ? "" : ", ") + std::string(to_string(k));
  return s;
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  throw UsageError("unknown model '" + std::string(s) + "'; valid kinds: " + valid_kind_list());
}

inline Family family(ModelKind k) {
  switch (k) {
    case ModelKind::MlpIndividual:
    case ModelKind::MlpMulti: return Family::Mlp;
    case ModelKind::Segaa0Individual:
    case ModelKind::Segaa0Multi: return Family::Segaa0;
    default: return Family::Segaa;
  }
}

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Mlp: return "mlp";
    case Family::Segaa0: return "segaa0";
    case Family::Segaa: return "segaa";
  }
  return "?";
}

inline bool is_individual(ModelKind k) {
  return k == ModelKind::MlpIndividual || k == ModelKind::Segaa0Individual || k == ModelKind::SegaaIndividual;
}

inline ModelKind individual_kind(Family f) {
  switch (f) {
    case Family::Mlp: return ModelKind::MlpIndividual;
    case Family::Segaa0: return ModelKind::Segaa0Individual;
    case Family::Segaa: return ModelKind::SegaaIndividual;
  }
  return ModelKind::SegaaIndividual;
}

inline ModelKind multi_kind(Family f) {
  switch (f) {
    case Family::Mlp: return ModelKind::MlpMulti;
    case Family::Segaa0: return ModelKind::Segaa0Multi;
    case Family::Segaa: return ModelKind::SegaaMulti;
  }
  return ModelKind::SegaaMulti;
}

/// Output head for one target. The MLP family uses a 1-unit sigmoid gender
/// head (binary cross-entropy); the convolutional families use a 2-way softmax.
inline nn::HeadSpec head_for(Target t, Family f) {
  if (t == Target::Gender && f == Family::Mlp) return {"gender", 1, nn::Activation::Sigmoid};
  return {std::string(data::to_string(t)), data::cardinality(t), nn::Activation::Softmax};
}

namespace detail {

inline std::vector<nn::HeadSpec> heads(const std::vector<Target>& targets, Family f) {
  if (targets.empty()) throw UsageError("a model needs at least one target head");
  std::vector<nn::HeadSpec> out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (std::find(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(i), targets[i]) !=
        targets.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw UsageError("duplicate target head '" + std::string(data::to_string(targets[i])) + "'");
    }
    out.push_back(head_for(targets[i], f));
  }
  return out;
}

inline void check_trace(const NetworkSpec& spec) {
  try {
    nn::infer_trunk_shapes(spec);
  } catch (const UsageError& e) {
    throw UsageError("input of length " + std::to_string(spec.input.at(0)) + " too short for " + spec.name + ": " +
                     e.what());
  }
}

}  // namespace detail

/// dense 2048-1024-512-64 with ReLU, one dropout(0.25) after the last hidden layer.
inline NetworkSpec build_mlp(const std::vector<Target>& targets, std::size_t input_width = dsp::kFeatureDim) {
  NetworkSpec s;
  s.name = "mlp";
  s.input = {input_width};
  for (std::size_t units : {2048u, 1024u, 512u, 64u}) {
    s.trunk.push_back(LayerSpec::dense(units));
    s.trunk.push_back(LayerSpec::relu());
  }
  s.trunk.push_back(LayerSpec::dropout(0.25));
  s.heads = detail::heads(targets, Family::Mlp);
  return s;
}

/// Three conv(k5) + ReLU + BN + maxpool(5, 2) stages (dropout 0.2 after the
/// second), flatten, dense 32 + BN + dropout 0.2.
inline NetworkSpec build_segaa0(const std::vector<Target>& targets, std::size_t input_length = dsp::kFeatureDim) {
  NetworkSpec s;
  s.name = "segaa0";
  s.input = {input_length, 1};
  const std::array<std::size_t, 3> filters{256, 128, 64};
  for (std::size_t i = 0; i < filters.size(); ++i) {
    s.trunk.push_back(LayerSpec::conv1d(filters[i], 5, 1));
    s.trunk.push_back(LayerSpec::relu());
    s.trunk.push_back(LayerSpec::batchnorm());
    s.trunk.push_back(LayerSpec::maxpool(5, 2));
    if (i == 1) s.trunk.push_back(LayerSpec::dropout(0.2));
  }
  s.trunk.push_back(LayerSpec::flatten());
  s.trunk.push_back(LayerSpec::dense(32));
  s.trunk.push_back(LayerSpec::relu());
  s.trunk.push_back(LayerSpec::batchnorm());
  s.trunk.push_back(LayerSpec::dropout(0.2));
  s.heads = detail::heads(targets, Family::Segaa0);
  detail::check_trace(s);
  return s;
}

/// Three blocks of conv(k3) + ReLU + BN + maxpool(2, 2) + dropout 0.3 with
/// 256/128/64 filters, flatten, dense 64 + BN + dropout 0.3.
inline NetworkSpec build_segaa(const std::vector<Target>& targets, std::size_t input_length = dsp::kFeatureDim) {
  NetworkSpec s;
  s.name = "segaa";
  s.input = {input_length, 1};
  for (std::size_t f : {256u, 128u, 64u}) {
    s.trunk.push_back(LayerSpec::conv1d(f, 3, 1));
    s.trunk.push_back(LayerSpec::relu());
    s.trunk.push_back(LayerSpec::batchnorm());
    s.trunk.push_back(LayerSpec::maxpool(2, 2));
    s.trunk.push_back(LayerSpec::dropout(0.3));
  }
  s.trunk.push_back(LayerSpec::flatten());
  s.trunk.push_back(LayerSpec::dense(64));
  s.trunk.push_back(LayerSpec::relu());
  s.trunk.push_back(LayerSpec::batchnorm());
  s.trunk.push_back(LayerSpec::dropout(0.3));
  s.heads = detail::heads(targets, Family::Segaa);
  detail::check_trace(s);
  return s;
}

inline std::vector<Target> default_targets() { return {Target::Emotion, Target::Gender, Target::Age}; }

/// Spec for a model kind. Individual kinds take exactly one target.
inline NetworkSpec build_model(ModelKind kind, std::vector<Target> targets = {},
                               std::size_t input = dsp::kFeatureDim) {
  if (targets.empty() && !is_individual(kind)) targets = default_targets();
  if (is_individual(kind) && targets.size() != 1) {
    throw UsageError(std::string(to_string(kind)) + " needs exactly one target");
  }
  NetworkSpec s;
  switch (family(kind)) {
    case Family::Mlp: s = build_mlp(targets, input); break;
    case Family::Segaa0: s = build_segaa0(targets, input); break;
    case Family::Segaa: s = build_segaa(targets, input); break;
  }
  s.name = std::string(to_string(kind));
  return s;
}

/// Optimizer, batch size, epoch cap and callbacks for one training run.
struct TrainSchedule {
  optim::OptimizerKind optimizer = optim::OptimizerKind::Nadam;
  optim::SgdConfig sgd;
  optim::AdamConfig adam;
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  bool early_stopping = true;
  std::size_t early_stop_patience = 5;
  bool plateau = true;
  std::size_t plateau_patience = 3;
  double plateau_factor = 0.5;
  double min_lr = 1e-6;
  bool operator==(const TrainSchedule&) const = default;
};

/// MLP: SGD, batch 32, full 200 epochs. Gen-0: Adam with callbacks.
/// SEGAA: Nadam, batch 16, callbacks.
inline TrainSchedule default_schedule(Family f) {
  TrainSchedule s;
  switch (f) {
    case Family::Mlp:
      s.optimizer = optim::OptimizerKind::Sgd;
      s.batch_size = 32;
      s.early_stopping = false;
      s.plateau = false;
      break;
    case Family::Segaa0:
      s.optimizer = optim::OptimizerKind::Adam;
      s.batch_size = 32;
      break;
    case Family::Segaa:
      s.optimizer = optim::OptimizerKind::Nadam;
      s.batch_size = 16;
      break;
  }
  return s;
}

}  // namespace segaa::models

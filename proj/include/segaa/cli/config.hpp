#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "segaa/harness/experiment.hpp"

namespace segaa::cli {

using json = nlohmann::ordered_json;
using models::ModelKind;
using models::TrainSchedule;

struct DataConfig {
  std::uint64_t seed = 7;
  data::SplitFractions split;
  std::vector<data::CorpusRoot> corpus_roots;
  bool synthetic = true;
  std::size_t synthetic_per_class = 3;
  std::vector<dsp::Augmentation> augmentations{dsp::Augmentation::Noise, dsp::Augmentation::Stretch,
                                               dsp::Augmentation::Pitch, dsp::Augmentation::Shift};
  std::string store = "segaa_out/features.csv";
  bool operator==(const DataConfig&) const = default;
};

struct HarnessConfig {
  std::vector<std::string> plan{"study"};
  std::uint64_t seed = 7;
  std::size_t epochs_cap = 0;
  bool deterministic = true;
  std::size_t workers = 1;
  std::string out_dir = "segaa_out";
  bool operator==(const HarnessConfig&) const = default;
};

struct ToolkitConfig {
  data::DspConfig dsp;
  DataConfig data;
  std::map<ModelKind, TrainSchedule> models;  // per-kind overrides
  HarnessConfig harness;

  TrainSchedule schedule(ModelKind k) const {
    auto it = models.find(k);
    return it != models.end() ? it->second : models::default_schedule(models::family(k));
  }
  bool operator==(const ToolkitConfig&) const = default;
};

namespace detail {

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be reported with their JSON-pointer location.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UsageError("config: " + location() + " must be an object");
  }

  template <typename V>
  void get(const std::string& key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const json::exception&) {
      throw UsageError("config: " + where_ + "/" + key + " has the wrong type");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const std::string& key) const { return where_ + "/" + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw UsageError("config: unknown key at " + where_ + "/" + it.key());
    }
  }

 private:
  std::string location() const { return where_.empty() ? "top level" : where_; }
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw UsageError("config: " + where + " " + what);
}

inline data::Source parse_source(const std::string& s, const std::string& where) {
  if (s == "crema_d") return data::Source::CremaD;
  if (s == "emo_db") return data::Source::EmoDb;
  throw UsageError("config: " + where + " must be crema_d or emo_db, got '" + s + "'");
}

inline json schedule_json(const TrainSchedule& s) {
  json j;
  j["optimizer"] = std::string(optim::to_string(s.optimizer));
  j["learning_rate"] = s.optimizer == optim::OptimizerKind::Sgd ? s.sgd.lr : s.adam.lr;
  j["decay"] = s.sgd.decay;
  j["momentum"] = s.sgd.momentum;
  j["nesterov"] = s.sgd.nesterov;
  j["beta1"] = s.adam.beta1;
  j["beta2"] = s.adam.beta2;
  j["epsilon"] = s.adam.epsilon;
  j["epochs"] = s.epochs;
  j["batch_size"] = s.batch_size;
  j["early_stopping"] = s.early_stopping;
  j["patience"] = s.early_stop_patience;
  j["plateau"] = s.plateau;
  j["plateau_patience"] = s.plateau_patience;
  j["plateau_factor"] = s.plateau_factor;
  j["min_lr"] = s.min_lr;
  return j;
}

inline TrainSchedule read_schedule(const json& j, ModelKind k, const std::string& where) {
  TrainSchedule s = models::default_schedule(models::family(k));
  ObjectReader r(j, where);
  std::string opt(optim::to_string(s.optimizer));
  r.get("optimizer", opt);
  s.optimizer = optim::parse_optimizer(opt);
  if (r.has("learning_rate")) {
    double lr = 0;
    r.get("learning_rate", lr);
    (s.optimizer == optim::OptimizerKind::Sgd ? s.sgd.lr : s.adam.lr) = lr;
  } else {
    r.get("learning_rate", s.adam.lr);
  }
  r.get("decay", s.sgd.decay);
  r.get("momentum", s.sgd.momentum);
  r.get("nesterov", s.sgd.nesterov);
  r.get("beta1", s.adam.beta1);
  r.get("beta2", s.adam.beta2);
  r.get("epsilon", s.adam.epsilon);
  r.get("epochs", s.epochs);
  r.get("batch_size", s.batch_size);
  r.get("early_stopping", s.early_stopping);
  r.get("patience", s.early_stop_patience);
  r.get("plateau", s.plateau);
  r.get("plateau_patience", s.plateau_patience);
  r.get("plateau_factor", s.plateau_factor);
  r.get("min_lr", s.min_lr);
  r.finish();
  check(s.batch_size > 0, where + "/batch_size", "must be positive");
  check(s.early_stop_patience > 0, where + "/patience", "must be positive");
  check(s.plateau_patience > 0, where + "/plateau_patience", "must be positive");
  check(s.plateau_factor > 0 && s.plateau_factor < 1, where + "/plateau_factor", "must lie in (0, 1)");
  try {
    if (s.optimizer == optim::OptimizerKind::Sgd) s.sgd.validate(); else s.adam.validate();
  } catch (const UsageError& e) {
    throw UsageError("config: " + where + ": " + e.what());
  }
  return s;
}

}  // namespace detail

inline void validate(const ToolkitConfig& c) {
  using detail::check;
  check(c.dsp.sample_rate > 0, "/dsp/sample_rate", "must be positive");
  check(c.dsp.duration > 0, "/dsp/duration", "must be positive");
  try {
    c.dsp.frame.validate();
  } catch (const UsageError& e) {
    throw UsageError(std::string("config: /dsp: ") + e.what());
  }
  check(c.dsp.mfcc.n_coeffs == dsp::kMfccCount, "/dsp/n_mfcc",
        "must be " + std::to_string(dsp::kMfccCount) + " (the feature vector layout is fixed)");
  check(c.dsp.mfcc.n_mels >= c.dsp.mfcc.n_coeffs, "/dsp/n_mels", "must be at least n_mfcc");
  const double upper = c.dsp.mfcc.fmax > 0 ? c.dsp.mfcc.fmax : c.dsp.sample_rate / 2.0;
  check(c.dsp.mfcc.fmin >= 0 && c.dsp.mfcc.fmin < upper && upper <= c.dsp.sample_rate / 2.0, "/dsp/fmin",
        "and fmax must satisfy 0 <= fmin < fmax <= sample_rate / 2");
  check(c.dsp.mfcc.log_floor > 0, "/dsp/log_floor", "must be positive");
  check(c.dsp.augment.noise_factor >= 0, "/dsp/augment/noise_factor", "must be non-negative");
  check(c.dsp.augment.stretch_rate > 0, "/dsp/augment/stretch_rate", "must be positive");
  const auto& f = c.data.split;
  check(f.train > 0 && f.val > 0 && f.test > 0 && std::abs(f.train + f.val + f.test - 1.0) < 1e-9, "/data/split",
        "fractions must be positive and sum to 1");
  check(c.data.synthetic || !c.data.corpus_roots.empty(), "/data", "configures no corpus (enable synthetic or add corpus_roots)");
  check(c.data.synthetic_per_class > 0, "/data/synthetic/n_per_class", "must be positive");
  check(c.harness.workers > 0, "/harness/workers", "must be positive");
  check(!c.harness.plan.empty(), "/harness/plan", "must not be empty");
}

inline json to_json(const ToolkitConfig& c) {
  json j;
  auto& d = j["dsp"];
  d["sample_rate"] = c.dsp.sample_rate;
  d["duration"] = c.dsp.duration;
  d["frame_length"] = c.dsp.frame.frame_length;
  d["hop_length"] = c.dsp.frame.hop;
  d["fft_size"] = c.dsp.frame.fft_size;
  d["n_mels"] = c.dsp.mfcc.n_mels;
  d["n_mfcc"] = c.dsp.mfcc.n_coeffs;
  d["fmin"] = c.dsp.mfcc.fmin;
  d["fmax"] = c.dsp.mfcc.fmax;
  d["log_floor"] = c.dsp.mfcc.log_floor;
  d["augment"] = {{"noise_factor", c.dsp.augment.noise_factor},
                  {"stretch_rate", c.dsp.augment.stretch_rate},
                  {"pitch_semitones", c.dsp.augment.pitch_semitones},
                  {"shift_max", c.dsp.augment.shift_max}};
  auto& a = j["data"];
  a["seed"] = c.data.seed;
  a["split"] = {{"train", c.data.split.train}, {"val", c.data.split.val}, {"test", c.data.split.test}};
  a["corpus_roots"] = json::array();
  for (const auto& r : c.data.corpus_roots) {
    json rj{{"type", std::string(data::to_string(r.type))}, {"path", r.root.string()}};
    if (!r.demographics.empty()) rj["demographics"] = r.demographics.string();
    a["corpus_roots"].push_back(rj);
  }
  a["synthetic"] = {{"enabled", c.data.synthetic}, {"n_per_class", c.data.synthetic_per_class}};
  a["augmentations"] = json::array();
  for (auto aug : c.data.augmentations) a["augmentations"].push_back(std::string(dsp::to_string(aug)));
  a["store"] = c.data.store;
  j["models"] = json::object();
  for (const auto& [k, s] : c.models) j["models"][std::string(models::to_string(k))] = detail::schedule_json(s);
  j["harness"] = {{"plan", c.harness.plan},         {"seed", c.harness.seed},
                  {"epochs_cap", c.harness.epochs_cap}, {"deterministic", c.harness.deterministic},
                  {"workers", c.harness.workers},   {"out_dir", c.harness.out_dir}};
  return j;
}

inline ToolkitConfig config_from_json(const json& j) {
  ToolkitConfig c;
  detail::ObjectReader top(j, "");
  if (const json* dj = top.child("dsp")) {
    detail::ObjectReader r(*dj, "/dsp");
    r.get("sample_rate", c.dsp.sample_rate);
    r.get("duration", c.dsp.duration);
    r.get("frame_length", c.dsp.frame.frame_length);
    r.get("hop_length", c.dsp.frame.hop);
    r.get("fft_size", c.dsp.frame.fft_size);
    r.get("n_mels", c.dsp.mfcc.n_mels);
    r.get("n_mfcc", c.dsp.mfcc.n_coeffs);
    r.get("fmin", c.dsp.mfcc.fmin);
    r.get("fmax", c.dsp.mfcc.fmax);
    r.get("log_floor", c.dsp.mfcc.log_floor);
    if (const json* aj = r.child("augment")) {
      detail::ObjectReader ar(*aj, "/dsp/augment");
      ar.get("noise_factor", c.dsp.augment.noise_factor);
      ar.get("stretch_rate", c.dsp.augment.stretch_rate);
      ar.get("pitch_semitones", c.dsp.augment.pitch_semitones);
      ar.get("shift_max", c.dsp.augment.shift_max);
      ar.finish();
    }
    r.finish();
  }
  if (const json* dj = top.child("data")) {
    detail::ObjectReader r(*dj, "/data");
    r.get("seed", c.data.seed);
    if (const json* sj = r.child("split")) {
      detail::ObjectReader sr(*sj, "/data/split");
      sr.get("train", c.data.split.train);
      sr.get("val", c.data.split.val);
      sr.get("test", c.data.split.test);
      sr.finish();
    }
    if (const json* rj = r.child("corpus_roots")) {
      detail::check(rj->is_array(), "/data/corpus_roots", "must be an array");
      c.data.corpus_roots.clear();
      for (std::size_t i = 0; i < rj->size(); ++i) {
        const std::string where = "/data/corpus_roots/" + std::to_string(i);
        detail::ObjectReader cr((*rj)[i], where);
        std::string type, path, demo;
        cr.get("type", type);
        cr.get("path", path);
        cr.get("demographics", demo);
        cr.finish();
        detail::check(!path.empty(), where + "/path", "is required");
        data::CorpusRoot root{detail::parse_source(type, where + "/type"), path, demo};
        c.data.corpus_roots.push_back(root);
      }
    }
    if (const json* sj = r.child("synthetic")) {
      detail::ObjectReader sr(*sj, "/data/synthetic");
      sr.get("enabled", c.data.synthetic);
      sr.get("n_per_class", c.data.synthetic_per_class);
      sr.finish();
    }
    if (const json* aj = r.child("augmentations")) {
      detail::check(aj->is_array(), "/data/augmentations", "must be an array");
      c.data.augmentations.clear();
      for (std::size_t i = 0; i < aj->size(); ++i) {
        const std::string where = "/data/augmentations/" + std::to_string(i);
        detail::check((*aj)[i].is_string(), where, "must be a string");
        try {
          c.data.augmentations.push_back(dsp::parse_augmentation((*aj)[i].get<std::string>()));
        } catch (const UsageError& e) {
          throw UsageError("config: " + where + ": " + e.what());
        }
      }
    }
    r.get("store", c.data.store);
    r.finish();
  }
  if (const json* mj = top.child("models")) {
    detail::check(mj->is_object(), "/models", "must be an object");
    for (auto it = mj->begin(); it != mj->end(); ++it) {
      ModelKind k;
      try {
        k = models::parse_model_kind(it.key());
      } catch (const UsageError& e) {
        throw UsageError("config: unknown key at /models/" + it.key() + ": " + e.what());
      }
      c.models[k] = detail::read_schedule(it.value(), k, "/models/" + it.key());
    }
  }
  if (const json* hj = top.child("harness")) {
    detail::ObjectReader r(*hj, "/harness");
    r.get("plan", c.harness.plan);
    r.get("seed", c.harness.seed);
    r.get("epochs_cap", c.harness.epochs_cap);
    r.get("deterministic", c.harness.deterministic);
    r.get("workers", c.harness.workers);
    r.get("out_dir", c.harness.out_dir);
    r.finish();
  }
  top.finish();
  validate(c);
  return c;
}

inline ToolkitConfig parse_config(const std::string& text, const std::string& name = "<config>") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(name + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

inline ToolkitConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("cannot open config file " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), p.string());
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    throw UsageError(msg.rfind(p.string(), 0) == 0 ? msg : p.string() + ": " + msg);
  }
}

/// Expands the plan entries; "study" stands for the ten-run study matrix.
inline std::vector<harness::RunSpec> expand_plan(const std::vector<std::string>& entries) {
  std::vector<harness::RunSpec> out;
  for (const auto& e : entries) {
    if (e == "study") {
      for (auto& r : harness::study_plan()) out.push_back(std::move(r));
    } else {
      out.push_back(harness::parse_run(e));
    }
  }
  return out;
}

inline harness::ExperimentPlan make_plan(const ToolkitConfig& c) {
  harness::ExperimentPlan p;
  p.runs = expand_plan(c.harness.plan);
  p.seed = c.harness.seed;
  p.epochs_cap = c.harness.epochs_cap;
  p.deterministic = c.harness.deterministic;
  p.workers = c.harness.workers;
  p.schedules = c.models;
  p.config = to_json(c);
  // Where the artifacts land is not part of the experiment.
  p.config["harness"].erase("out_dir");
  return p;
}

}  // namespace segaa::cli

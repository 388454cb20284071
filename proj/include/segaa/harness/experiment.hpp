#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "segaa/harness/train.hpp"
#include "segaa/models/cascade.hpp"
#include "segaa/models/checkpoint.hpp"

namespace segaa::harness {

using models::CascadeSpec;
using models::Family;
using models::ModelKind;
using json = nlohmann::ordered_json;

/// One entry of an experiment plan. Individual kinds train one network per
/// listed target; multi-output kinds train a single network; cascades train
/// three single-target stages.
struct RunSpec {
  ModelKind kind = ModelKind::SegaaMulti;
  std::vector<Target> targets = models::default_targets();
  std::optional<CascadeSpec> cascade;

  std::string name() const {
    if (cascade) return cascade->name();
    std::string n(models::to_string(kind));
    if (models::is_individual(kind) && targets != models::default_targets()) {
      for (Target t : targets) n += "_" + std::string(data::to_string(t));
    }
    return n;
  }
  bool operator==(const RunSpec&) const = default;
};

/// "segaa_multi", "segaa_individual", "segaa_individual:age",
/// "cascade:segaa:emotion-gender-age", "cascade:mlp:gender-age-emotion:all".
inline RunSpec parse_run(const std::string& s) {
  RunSpec r;
  const auto parts = data::detail::split(s, ':');
  if (parts.empty() || parts[0].empty()) throw UsageError("empty run entry in plan");
  if (parts[0] == "cascade") {
    if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "all")) {
      throw UsageError("cascade run '" + s + "' must look like cascade:<family>:<t1-t2-t3>[:all]");
    }
    CascadeSpec c;
    Family f;
    if (parts[1] == "mlp") f = Family::Mlp;
    else if (parts[1] == "segaa0") f = Family::Segaa0;
    else if (parts[1] == "segaa") f = Family::Segaa;
    else throw UsageError("unknown cascade family '" + parts[1] + "' (expected mlp, segaa0 or segaa)");
    c.stage_kind = models::individual_kind(f);
    c.order = models::parse_order(parts[2]);
    c.forward_all = parts.size() == 4;
    r.kind = c.stage_kind;
    r.targets = {c.order.begin(), c.order.end()};
    r.cascade = c;
    return r;
  }
  if (parts.size() > 2) throw UsageError("malformed run entry '" + s + "'");
  r.kind = models::parse_model_kind(parts[0]);
  if (parts.size() == 2) {
    if (!models::is_individual(r.kind)) throw UsageError("only individual kinds take a target list: '" + s + "'");
    r.targets.clear();
    for (const auto& t : data::detail::split(parts[1], ',')) r.targets.push_back(data::parse_target(t));
  }
  return r;
}

inline std::string to_string(const RunSpec& r) {
  if (r.cascade) {
    std::string s = "cascade:" + std::string(models::to_string(models::family(r.cascade->stage_kind))) + ":";
    for (std::size_t i = 0; i < 3; ++i) s += (i ? "-" : "") + std::string(data::to_string(r.cascade->order[i]));
    if (r.cascade->forward_all) s += ":all";
    return s;
  }
  std::string s(models::to_string(r.kind));
  if (models::is_individual(r.kind) && r.targets != models::default_targets()) {
    s += ":";
    for (std::size_t i = 0; i < r.targets.size(); ++i) s += (i ? "," : "") + std::string(data::to_string(r.targets[i]));
  }
  return s;
}

/// The study's ten runs: individual and multi-output variants of the three
/// families, the three SEGAA cascade orderings and the emotion-first MLP cascade.
inline std::vector<RunSpec> study_plan() {
  std::vector<RunSpec> out;
  for (auto k : models::kAllKinds) out.push_back(parse_run(std::string(models::to_string(k))));
  for (const char* c : {"cascade:segaa:gender-age-emotion", "cascade:segaa:age-emotion-gender",
                        "cascade:segaa:emotion-gender-age", "cascade:mlp:emotion-gender-age"}) {
    out.push_back(parse_run(c));
  }
  return out;
}

struct ExperimentPlan {
  std::vector<RunSpec> runs;
  std::uint64_t seed = 0;
  std::size_t epochs_cap = 0;  // 0 keeps each schedule's own cap
  bool deterministic = true;
  std::size_t workers = 1;
  std::map<ModelKind, TrainSchedule> schedules;  // overrides of default_schedule
  json config = json::object();                  // snapshot copied into reports and checkpoints

  TrainSchedule schedule_for(ModelKind k) const {
    auto it = schedules.find(k);
    TrainSchedule s = it != schedules.end() ? it->second : models::default_schedule(models::family(k));
    if (epochs_cap > 0) s.epochs = std::min(s.epochs, epochs_cap);
    return s;
  }
  void validate() const {
    if (runs.empty()) throw UsageError("experiment plan has no runs");
    if (workers == 0) throw UsageError("worker count must be at least 1");
  }
};

/// Train/val/test rows plus the standardizer fitted on train.
struct PreparedData {
  data::SplitSet split;
  data::Standardizer standardizer;
};

inline PreparedData prepare(const std::vector<data::LabeledExample>& examples, data::SplitFractions fr,
                            std::uint64_t seed) {
  PreparedData p;
  p.split = data::stratified_split(examples, fr, seed);
  p.standardizer = data::fit_standardizer(p.split.train);
  return p;
}

/// Teacher-forced vs inference-time accuracy of one cascade stage.
struct StageRecord {
  std::size_t stage = 0;  // 1-based
  Target target = Target::Emotion;
  std::vector<Target> upstream;
  double oracle_fed_accuracy = 0;
  double predicted_fed_accuracy = 0;
};

struct NetworkRecord {
  std::string label;  // target name, or "all" for multi-output
  std::size_t epochs = 0;
  bool stopped_early = false;
  std::size_t best_epoch = 0;
  double train_seconds = 0;
  History history;
};

struct EvalReport {
  std::string run;
  std::string kind;  // ModelKind name or "cascade"
  std::vector<TargetMetrics> targets;
  std::vector<NetworkRecord> networks;
  std::vector<StageRecord> stages;
  double train_seconds = 0;
  std::string error;  // non-empty when the run failed
  std::exception_ptr failure;
  json config = json::object();
  bool ok() const { return error.empty(); }
};

struct RuntimeRatio {
  Family family;
  double multi_seconds = 0, individual_seconds = 0;
  double ratio() const { return individual_seconds > 0 ? multi_seconds / individual_seconds : 0.0; }
};

struct MatrixResult {
  std::vector<EvalReport> reports;
  std::vector<RuntimeRatio> ratios;
};

namespace detail {

inline std::uint64_t run_seed(std::uint64_t base, const std::string& run, const std::string& part) {
  return derive_seed(base, hash_string(run + "/" + part));
}

inline json metrics_json(const std::vector<TargetMetrics>& ms) {
  json j = json::object();
  for (const auto& m : ms) {
    j[std::string(data::to_string(m.target))] = {
        {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  }
  return j;
}

}  // namespace detail

/// Where trained networks go; null disables checkpointing.
struct CheckpointSink {
  std::filesystem::path dir;
  std::string file_name(const std::string& run, const std::string& label) const {
    return run + "_" + label + "_checkpoint.segaa";
  }
};

/// Trains and evaluates one run on the prepared split.
inline EvalReport execute_run(const RunSpec& run, const PreparedData& prep, const ExperimentPlan& plan,
                              const CheckpointSink* sink = nullptr) {
  EvalReport rep;
  rep.run = run.name();
  rep.kind = run.cascade ? "cascade" : std::string(models::to_string(run.kind));
  rep.config = plan.config;
  const TrainSchedule sched = plan.schedule_for(run.kind);

  auto fit = [&](nn::NetworkSpec spec, const std::string& label, const Dataset& tr, const Dataset& va) {
    const std::uint64_t s = detail::run_seed(plan.seed, rep.run, label);
    nn::Network<float> net(std::move(spec), derive_seed(s, 1));
    const History h = train(net, tr, va, sched, derive_seed(s, 2));
    rep.networks.push_back({label, h.epochs.size(), h.stopped_early, h.best_epoch, h.train_seconds, h});
    rep.train_seconds += h.train_seconds;
    return net;
  };
  auto save = [&](nn::Network<float>& net, const std::string& label, std::string kind,
                  const std::vector<Target>& upstream, const std::vector<TargetMetrics>& ms) {
    if (!sink) return;
    models::CheckpointContext ctx;
    ctx.model_kind = std::move(kind);
    ctx.targets = head_targets(net.spec());
    ctx.standardizer = prep.standardizer;
    ctx.config = plan.config;
    ctx.metrics = detail::metrics_json(ms);
    json up = json::array();
    for (Target t : upstream) up.push_back(std::string(data::to_string(t)));
    ctx.extra = {{"run", rep.run}, {"upstream", up}};
    models::save_checkpoint(sink->dir / sink->file_name(rep.run, label), net, ctx);
  };

  try {
    const auto& sp = prep.split;
    if (run.cascade) {
      const CascadeSpec& c = *run.cascade;
      const auto specs = models::build_cascade(c);
      std::map<Target, std::vector<int>> predicted;  // inference-time test predictions per target
      for (std::size_t i = 0; i < 3; ++i) {
        const Target t = c.order[i];
        const auto up = c.upstream(i);
        const std::string label = "stage" + std::to_string(i + 1) + "_" + std::string(data::to_string(t));
        auto net = fit(specs[i], label, make_dataset(sp.train, prep.standardizer, up),
                       make_dataset(sp.val, prep.standardizer, up));
        const Dataset oracle = make_dataset(sp.test, prep.standardizer, up);
        std::vector<std::vector<int>> up_pred;
        for (Target u : up) up_pred.push_back(predicted.at(u));
        const Dataset fed = make_dataset(sp.test, prep.standardizer, up, &up_pred);
        const auto m_fed = evaluate(net, fed);
        predicted[t] = predict(net, fed)[0];
        if (i > 0) {
          rep.stages.push_back({i + 1, t, up, evaluate(net, oracle)[0].accuracy, m_fed[0].accuracy});
        }
        rep.targets.push_back(m_fed[0]);
        save(net, label, std::string(models::to_string(c.stage_kind)), up, m_fed);
      }
    } else if (models::is_individual(run.kind)) {
      const Dataset tr = make_dataset(sp.train, prep.standardizer), va = make_dataset(sp.val, prep.standardizer),
                    te = make_dataset(sp.test, prep.standardizer);
      for (Target t : run.targets) {
        const std::string label(data::to_string(t));
        auto net = fit(models::build_model(run.kind, {t}), label, tr, va);
        const auto ms = evaluate(net, te);
        rep.targets.push_back(ms[0]);
        save(net, label, rep.kind, {}, ms);
      }
    } else {
      const Dataset tr = make_dataset(sp.train, prep.standardizer), va = make_dataset(sp.val, prep.standardizer),
                    te = make_dataset(sp.test, prep.standardizer);
      auto net = fit(models::build_model(run.kind, run.targets), "all", tr, va);
      rep.targets = evaluate(net, te);
      save(net, "all", rep.kind, {}, rep.targets);
    }
  } catch (const Error& e) {
    rep.error = e.what();
    rep.failure = std::current_exception();
  }
  return rep;
}

/// Runtime ratio for every family whose multi-output run and all-target
/// individual run are both present and succeeded.
inline std::vector<RuntimeRatio> runtime_ratios(const std::vector<RunSpec>& runs, const std::vector<EvalReport>& reps) {
  std::vector<RuntimeRatio> out;
  for (Family f : {Family::Mlp, Family::Segaa0, Family::Segaa}) {
    std::optional<double> multi, ind;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (runs[i].cascade || !reps[i].ok()) continue;
      if (runs[i].kind == models::multi_kind(f) && runs[i].targets.size() == 3) multi = reps[i].train_seconds;
      if (runs[i].kind == models::individual_kind(f) && runs[i].targets.size() == 3) ind = reps[i].train_seconds;
    }
    if (multi && ind) out.push_back({f, *multi, *ind});
  }
  return out;
}

/// Runs every plan entry; a failed run is recorded and the matrix continues.
/// With several workers, runs execute on separate threads; each run's timing
/// is the CPU time of its own thread.
inline MatrixResult run_matrix(const ExperimentPlan& plan, const PreparedData& prep,
                               const CheckpointSink* sink = nullptr,
                               const std::function<void(const EvalReport&)>& on_done = {}) {
  plan.validate();
  MatrixResult res;
  res.reports.resize(plan.runs.size());
  if (sink) std::filesystem::create_directories(sink->dir);
  const std::size_t workers = std::min(plan.workers, plan.runs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < plan.runs.size(); ++i) {
      res.reports[i] = execute_run(plan.runs[i], prep, plan, sink);
      if (on_done) on_done(res.reports[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plan.runs.size(); i = next++) {
          res.reports[i] = execute_run(plan.runs[i], prep, plan, sink);
        }
      });
    }
    for (auto& t : pool) t.join();
    if (on_done) {
      for (const auto& r : res.reports) on_done(r);
    }
  }
  res.ratios = runtime_ratios(plan.runs, res.reports);
  return res;
}

}  // namespace segaa::harness

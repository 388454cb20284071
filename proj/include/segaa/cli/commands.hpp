#pragma once

#include <filesystem>
#include <exception>
#include <iomanip>
#include <optional>
#include <set>
#include <ostream>
#include <string>
#include <vector>

#include "segaa/cli/config.hpp"
#include "segaa/data/store.hpp"
#include "segaa/harness/report.hpp"

namespace segaa::cli {

namespace fs = std::filesystem;
using data::Target;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Maps the error hierarchy onto exit codes.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  return kExitData;
}

/// "crema_d=/path", "emo_db=/path", or a bare path whose type is inferred
/// from the presence of VideoDemographics.csv.
inline data::CorpusRoot parse_corpus_root(const std::string& s) {
  const auto eq = s.find('=');
  if (eq != std::string::npos) {
    const std::string type = s.substr(0, eq);
    return {detail::parse_source(type, "--corpus-root"), s.substr(eq + 1), {}};
  }
  const fs::path p(s);
  const bool crema = fs::exists(p / "VideoDemographics.csv");
  return {crema ? data::Source::CremaD : data::Source::EmoDb, p, {}};
}

/// Every clip the config names: the synthetic corpus and/or scanned roots.
inline std::vector<data::CorpusItem> gather_corpus(const ToolkitConfig& c, std::ostream& log) {
  std::vector<data::CorpusItem> items;
  if (c.data.synthetic) {
    items = data::synth_items(data::synth_corpus(c.data.synthetic_per_class, c.data.seed, c.dsp.sample_rate));
    log << "synthetic corpus: " << items.size() << " clips\n";
  }
  for (const auto& root : c.data.corpus_roots) {
    if (!fs::is_directory(root.root)) throw DataError("corpus root not found: " + root.root.string());
    auto scan = data::scan_corpus(root);
    log << data::to_string(root.type) << " at " << root.root.string() << ": " << scan.items.size() << " clips";
    if (scan.skipped_boredom) log << ", " << scan.skipped_boredom << " boredom clips skipped";
    log << '\n';
    for (const auto& e : scan.errors) log << "warning: " << e << '\n';
    for (auto& it : scan.items) items.push_back(std::move(it));
  }
  if (items.empty()) throw DataError("the configured corpora contain no usable clips");
  return items;
}

inline std::vector<data::LabeledExample> build_examples(const ToolkitConfig& c, std::ostream& log) {
  auto result = data::build_dataset(gather_corpus(c, log), c.dsp, c.data.augmentations, c.data.seed);
  for (const auto& e : result.errors) log << "warning: " << e << '\n';
  return std::move(result.examples);
}

inline json manifest_json(const ToolkitConfig& c, const std::vector<data::LabeledExample>& rows,
                          const harness::PreparedData& prep) {
  json m;
  m["rows"] = rows.size();
  std::set<std::string> groups;
  for (const auto& r : rows) groups.insert(r.group());
  m["clips"] = groups.size();
  m["split"] = {{"seed", prep.split.seed},
                {"joint_strata", prep.split.joint_strata},
                {"train", prep.split.train.size()},
                {"val", prep.split.val.size()},
                {"test", prep.split.test.size()}};
  m["standardizer"] = models::to_json(prep.standardizer);
  m["config"] = to_json(c);
  m["config"]["harness"].erase("out_dir");
  return m;
}

/// Ingest, augment, extract, split and standardize; writes the feature store
/// and a manifest beside it.
inline int cmd_build(const ToolkitConfig& c, const fs::path& store, std::ostream& log) {
  const auto rows = build_examples(c, log);
  const auto prep = harness::prepare(rows, c.data.split, c.data.seed);
  data::write_store(store, rows);
  fs::path manifest = store;
  manifest.replace_extension(".manifest.json");
  harness::detail::write_text(manifest, manifest_json(c, rows, prep).dump(2) + "\n");
  log << "wrote " << rows.size() << " rows to " << store.string() << " (train " << prep.split.train.size() << ", val "
      << prep.split.val.size() << ", test " << prep.split.test.size() << ")\n";
  return kExitOk;
}

inline std::vector<data::LabeledExample> load_store_rows(const fs::path& store) {
  if (!fs::exists(store)) throw DataError("feature store not found: " + store.string());
  auto rows = data::read_store(store);
  if (rows.empty()) throw DataError("feature store " + store.string() + " has no rows");
  return rows;
}

inline void print_metrics(const harness::EvalReport& r, std::ostream& log) {
  if (!r.ok()) {
    log << r.run << ": FAILED: " << r.error << '\n';
    return;
  }
  for (const auto& m : r.targets) {
    log << r.run << " " << data::to_string(m.target) << ": accuracy " << std::fixed << std::setprecision(4) << m.accuracy
        << " precision " << m.precision << " recall " << m.recall << " f1 " << m.f1 << '\n';
  }
  for (const auto& s : r.stages) {
    log << r.run << " stage " << s.stage << " (" << data::to_string(s.target) << "): oracle-fed "
        << s.oracle_fed_accuracy << " predicted-fed " << s.predicted_fed_accuracy << '\n';
  }
  log.unsetf(std::ios::floatfield);
}

/// Trains one run (a model kind or a cascade) and checkpoints every network.
inline int cmd_train(const ToolkitConfig& c, const fs::path& store, const harness::RunSpec& run, const fs::path& out,
                     std::ostream& log) {
  const auto rows = load_store_rows(store);
  const auto prep = harness::prepare(rows, c.data.split, c.data.seed);
  auto plan = make_plan(c);
  plan.runs = {run};
  const harness::CheckpointSink sink{out};
  fs::create_directories(out);
  const auto rep = harness::execute_run(run, prep, plan, &sink);
  if (!rep.ok()) {
    log << rep.run << ": training failed\n";
    std::rethrow_exception(rep.failure);
  }
  for (const auto& n : rep.networks) {
    const fs::path h = out / harness::artifact_name(rep.run, n.label, "history", "json");
    harness::detail::write_text(h, harness::history_json(n.history, !c.harness.deterministic).dump(2) + "\n");
    log << "checkpoint " << (out / sink.file_name(rep.run, n.label)).string() << " (" << n.epochs << " epochs"
        << (n.stopped_early ? ", stopped early" : "") << ")\n";
  }
  print_metrics(rep, log);
  return kExitOk;
}

inline std::vector<data::LabeledExample> select_split(const harness::PreparedData& prep, const std::string& which,
                                                      const std::vector<data::LabeledExample>& all) {
  if (which == "test") return prep.split.test;
  if (which == "val") return prep.split.val;
  if (which == "train") return prep.split.train;
  if (which == "all") return all;
  throw UsageError("unknown split '" + which + "' (expected train, val, test or all)");
}

inline std::vector<Target> upstream_of(const models::CheckpointContext& ctx) {
  std::vector<Target> up;
  if (ctx.extra.contains("upstream")) {
    for (const auto& t : ctx.extra.at("upstream")) up.push_back(data::parse_target(t.get<std::string>()));
  }
  return up;
}

/// Evaluates checkpoints on a store split (upstream inputs of cascade stages
/// are teacher-forced) and emits one report per checkpoint.
inline int cmd_eval(const std::vector<fs::path>& checkpoints, const fs::path& store, const std::string& split,
                    const fs::path& out, std::ostream& log) {
  if (checkpoints.empty()) throw UsageError("eval needs at least one checkpoint");
  const auto rows = load_store_rows(store);
  harness::MatrixResult res;
  for (const auto& path : checkpoints) {
    auto ck = models::load_checkpoint(path);
    const ToolkitConfig c = config_from_json(ck.context.config);
    const auto prep = harness::prepare(rows, c.data.split, c.data.seed);
    const auto subset = select_split(prep, split, rows);
    if (subset.empty()) throw DataError("the " + split + " split of " + store.string() + " is empty");
    harness::EvalReport rep;
    rep.run = ck.context.extra.value("run", path.stem().string());
    rep.kind = ck.context.model_kind;
    rep.config = ck.context.config;
    rep.targets = harness::evaluate(ck.network, harness::make_dataset(subset, ck.context.standardizer, upstream_of(ck.context)));
    print_metrics(rep, log);
    res.reports.push_back(std::move(rep));
  }
  harness::emit_report(res, out, {true, false});
  log << "report written to " << out.string() << '\n';
  return kExitOk;
}

/// Runs the experiment matrix and emits the comparison.
inline int cmd_compare(const ToolkitConfig& c, const std::optional<fs::path>& store, const fs::path& out,
                       std::ostream& log) {
  std::vector<data::LabeledExample> rows;
  if (store) {
    rows = load_store_rows(*store);
  } else {
    rows = build_examples(c, log);
    fs::create_directories(out);
    data::write_store(out / "features.csv", rows);
  }
  const auto prep = harness::prepare(rows, c.data.split, c.data.seed);
  const auto plan = make_plan(c);
  log << "running " << plan.runs.size() << " runs on " << rows.size() << " rows\n";
  const harness::CheckpointSink sink{out / "checkpoints"};
  const auto res = harness::run_matrix(plan, prep, &sink, [&](const harness::EvalReport& r) { print_metrics(r, log); });
  harness::emit_report(res, out, {plan.deterministic, true});
  log << '\n' << harness::comparison_table(res.reports);
  for (const auto& rr : res.ratios) {
    log << "runtime ratio " << models::to_string(rr.family) << " multi/individual: " << std::fixed << std::setprecision(3)
        << rr.ratio() << " (" << rr.multi_seconds << " s / " << rr.individual_seconds << " s)\n";
  }
  log.unsetf(std::ios::floatfield);
  log << "report written to " << out.string() << '\n';
  int code = kExitOk;
  std::size_t failed = 0;
  for (const auto& r : res.reports) {
    if (r.ok()) continue;
    ++failed;
    if (code == kExitOk) {
      try {
        std::rethrow_exception(r.failure);
      } catch (const std::exception& e) {
        code = exit_code_for(e);
      }
    }
  }
  if (failed) log << failed << " run(s) failed; see metrics.json\n";
  return code;
}

struct Prediction {
  Target target;
  int label = 0;
  std::vector<double> probabilities;  // per class in canonical order
};

/// Runs the dsp chain on one WAV and every checkpoint in order; later
/// checkpoints see the predictions of earlier ones as upstream inputs.
inline std::vector<Prediction> predict_wav(const std::vector<fs::path>& checkpoints, const fs::path& wav) {
  if (checkpoints.empty()) throw UsageError("predict needs at least one checkpoint");
  std::vector<Prediction> out;
  std::map<Target, int> known;
  for (const auto& path : checkpoints) {
    auto ck = models::load_checkpoint(path);
    const ToolkitConfig c = config_from_json(ck.context.config);
    dsp::MfccExtractor ex(c.dsp.sample_rate, c.dsp.frame, c.dsp.mfcc);
    const auto clip = dsp::load_wav(wav, c.dsp.sample_rate);
    data::LabeledExample row;
    row.features = data::clip_features(clip, c.dsp, ex);
    const auto up = upstream_of(ck.context);
    std::vector<std::vector<int>> up_cls;
    for (Target t : up) {
      auto it = known.find(t);
      if (it == known.end()) {
        throw UsageError(path.string() + " needs a " + std::string(data::to_string(t)) +
                         " prediction; pass the upstream checkpoint first");
      }
      up_cls.push_back({it->second});
    }
    const auto d = harness::make_dataset({row}, ck.context.standardizer, up, &up_cls);
    const auto probs = harness::infer(ck.network, d);
    for (std::size_t h = 0; h < probs.size(); ++h) {
      const auto& hs = ck.network.spec().heads[h];
      Prediction p;
      p.target = data::parse_target(hs.name);
      if (hs.activation == nn::Activation::Sigmoid) {
        p.probabilities = {1.0 - probs[h].data[0], static_cast<double>(probs[h].data[0])};
      } else {
        p.probabilities.assign(probs[h].data.begin(), probs[h].data.end());
      }
      p.label = harness::decide(probs[h], hs.activation)[0];
      known[p.target] = p.label;
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline int cmd_predict(const std::vector<fs::path>& checkpoints, const fs::path& wav, std::ostream& os) {
  for (const auto& p : predict_wav(checkpoints, wav)) {
    const auto names = data::class_names(p.target);
    os << data::to_string(p.target) << ": " << names[static_cast<std::size_t>(p.label)] << " (" << std::fixed
       << std::setprecision(4) << p.probabilities[static_cast<std::size_t>(p.label)] << ")";
    for (std::size_t k = 0; k < names.size(); ++k) os << (k ? " " : "  [") << names[k] << '=' << p.probabilities[k];
    os << "]\n";
  }
  os.unsetf(std::ios::floatfield);
  return kExitOk;
}

}  // namespace segaa::cli

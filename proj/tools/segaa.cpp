// segaa: build feature stores, train, evaluate and compare speech-attribute models.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "segaa/cli/commands.hpp"

namespace {

using namespace segaa;
using segaa::cli::ToolkitConfig;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<bool> deterministic;
  std::vector<std::string> corpus_roots;
  std::optional<std::size_t> epochs;
};

void add_common(CLI::App* app, Common& c, bool corpus) {
  app->add_option("--config", c.config, "toolkit config file (JSON)");
  app->add_option("--seed", c.seed, "seed for data generation, splitting and training");
  app->add_option("--out", c.out, "output path");
  app->add_flag("--deterministic,!--no-deterministic", c.deterministic,
                "keep timings out of reports so reruns are byte-identical");
  app->add_option("--epochs", c.epochs, "cap on training epochs");
  if (corpus) {
    app->add_option("--corpus-root", c.corpus_roots, "corpus directory, as crema_d=DIR, emo_db=DIR or DIR (repeatable)");
  }
}

/// Config file first, then flags.
ToolkitConfig resolve(const Common& c) {
  ToolkitConfig cfg = c.config.empty() ? ToolkitConfig{} : cli::load_config(c.config);
  if (c.seed) {
    cfg.data.seed = *c.seed;
    cfg.harness.seed = *c.seed;
  }
  if (c.deterministic) cfg.harness.deterministic = *c.deterministic;
  if (c.epochs) cfg.harness.epochs_cap = *c.epochs;
  if (!c.corpus_roots.empty()) {
    cfg.data.corpus_roots.clear();
    for (const auto& r : c.corpus_roots) cfg.data.corpus_roots.push_back(cli::parse_corpus_root(r));
    cfg.data.synthetic = false;
  }
  if (c.out) cfg.harness.out_dir = *c.out;
  cli::validate(cfg);
  return cfg;
}

harness::RunSpec resolve_run(const std::string& model, const std::string& order, const std::vector<std::string>& targets) {
  if (!order.empty()) {
    const auto kind = models::parse_model_kind(model.empty() ? "segaa_individual" : model);
    if (!models::is_individual(kind)) throw UsageError("--order needs an individual model kind for the stages");
    return harness::parse_run("cascade:" + std::string(models::to_string(models::family(kind))) + ":" + order);
  }
  if (model.empty()) throw UsageError("train needs --model (valid kinds: " + models::valid_kind_list() + ") or --order");
  std::string entry = model;
  if (!targets.empty()) {
    entry += ":";
    for (std::size_t i = 0; i < targets.size(); ++i) entry += (i ? "," : "") + targets[i];
  }
  return harness::parse_run(entry);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech emotion, gender and age benchmark toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  Common common;
  std::string model, order, store, split = "test", wav;
  std::vector<std::string> targets, stage_ckpts;
  std::vector<std::string> checkpoints;
  std::string predict_ckpt;

  auto* build = app.add_subcommand("build", "build the feature store from the configured corpora");
  add_common(build, common, true);

  auto* train = app.add_subcommand("train", "train one model kind or cascade and write checkpoints");
  add_common(train, common, false);
  train->add_option("--model", model, "model kind: " + models::valid_kind_list());
  train->add_option("--order", order, "cascade order, e.g. emotion,gender,age");
  train->add_option("--target", targets, "target(s) for an individual kind (default: all three)");
  train->add_option("--store", store, "feature store (default: from config)");

  auto* eval = app.add_subcommand("eval", "evaluate checkpoints on a feature store");
  add_common(eval, common, false);
  eval->add_option("checkpoint", checkpoints, "checkpoint file(s)")->required()->expected(1, -1);
  eval->add_option("--store", store, "feature store")->required();
  eval->add_option("--split", split, "train, val, test or all")->check(CLI::IsMember({"train", "val", "test", "all"}));

  auto* compare = app.add_subcommand("compare", "run the experiment matrix and emit the comparison report");
  add_common(compare, common, true);
  compare->add_option("--store", store, "existing feature store (default: build from config)");

  auto* predict = app.add_subcommand("predict", "predict labels for one WAV file");
  predict->add_option("checkpoint", predict_ckpt, "checkpoint file")->required();
  predict->add_option("wav", wav, "WAV file")->required();
  predict->add_option("--upstream", stage_ckpts, "earlier cascade stage checkpoints, in order (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  try {
    if (*build) {
      const auto cfg = resolve(common);
      return cli::cmd_build(cfg, common.out ? *common.out : cfg.data.store, std::cout);
    }
    if (*train) {
      const auto cfg = resolve(common);
      return cli::cmd_train(cfg, store.empty() ? cfg.data.store : store, resolve_run(model, order, targets),
                            cfg.harness.out_dir, std::cout);
    }
    if (*eval) {
      std::vector<std::filesystem::path> paths(checkpoints.begin(), checkpoints.end());
      return cli::cmd_eval(paths, store, split, common.out ? *common.out : "segaa_eval", std::cout);
    }
    if (*compare) {
      const auto cfg = resolve(common);
      std::optional<std::filesystem::path> s;
      if (!store.empty()) s = store;
      return cli::cmd_compare(cfg, s, cfg.harness.out_dir, std::cout);
    }
    if (*predict) {
      std::vector<std::filesystem::path> paths(stage_ckpts.begin(), stage_ckpts.end());
      paths.emplace_back(predict_ckpt);
      return cli::cmd_predict(paths, wav, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return cli::kExitUsage;
}

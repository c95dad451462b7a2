// narseg: feature coding, segmentation, tree learning and evaluation over a
// coded narrative corpus.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "narseg/experiment.hpp"

namespace cli = narseg::cli;

namespace {

struct Common {
  std::string config;
  cli::Overrides o;
  std::string out;
  std::string set = "all";
};

void add_common(CLI::App* app, Common& c, bool learner_flags) {
  app->add_option("--config", c.config, "experiment config (JSON)");
  app->add_option("--corpus", c.o.corpus_root, "corpus directory (overrides config and NARSEG_CORPUS_ROOT)");
  app->add_option("-T,--threshold", c.o.threshold, "subjects needed to label a boundary");
  app->add_option("--lexicon", c.o.lexicon, "cue word list, one per line");
  app->add_option("--global-pro-mode", c.o.global_pro_mode, "static or dynamic");
  app->add_option("--format", c.o.report_format, "report format: text or json");
  app->add_option("--averaging", c.o.averaging, "macro or micro");
  app->add_flag("--lenient", c.o.lenient, "record malformed transcript lines as warnings");
  app->add_option("--out", c.out, "output directory (or file, for features)");
  if (learner_flags) {
    app->add_option("--min-instances", c.o.min_instances, "records required in two branches of a split");
    app->add_option("--cf", c.o.confidence_factor, "pruning confidence factor");
    app->add_option("--grouping", c.o.grouping, "per_value or subset_search");
    app->add_option("--gain-restriction", c.o.gain_restriction, "gain_ratio_over_average_gain or pure_gain_ratio");
    app->add_flag("--no-prune", c.o.no_prune, "skip pruning");
    app->add_option("--tree-format", c.o.tree_format, "tree files: text or json");
    app->add_option("--folds", c.o.folds, "cross-validation folds (default: one per narrative)");
  }
}

cli::ExperimentConfig resolve(const Common& c) {
  auto cfg = c.config.empty() ? cli::default_config() : cli::load_config(c.config);
  cli::apply(cfg, c.o);
  return cfg;
}

std::optional<std::filesystem::path> out_path(const Common& c) {
  if (c.out.empty()) return std::nullopt;
  return std::filesystem::path(c.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"narseg: discourse segment boundaries in spoken narratives"};
  app.require_subcommand(1);

  Common features, segment, train, xval, eval;
  auto* f = app.add_subcommand("features", "write the coded feature table");
  add_common(f, features, false);
  f->add_option("--set", features.set, "train, test or all");

  auto* s = app.add_subcommand("segment", "segment narratives and score against the labels");
  add_common(s, segment, false);
  s->add_option("--algorithm", segment.o.algorithm, "np1, np2, builtin, builtin-expanded or tree:<path>");
  s->add_option("--set", segment.set, "train, test or all");

  auto* t = app.add_subcommand("train", "learn a tree on the training narratives");
  add_common(t, train, true);

  auto* x = app.add_subcommand("xval", "grouped cross-validation over the training narratives");
  add_common(x, xval, true);

  auto* e = app.add_subcommand("eval", "run every table of the experiment");
  add_common(e, eval, true);

  cli::GenOptions gen;
  std::string gen_out;
  std::string labeling = "planted";
  bool no_test = false;
  auto* g = app.add_subcommand("gen-corpus", "write a synthetic coded corpus");
  g->add_option("--out", gen_out, "output directory")->required();
  g->add_option("--seed", gen.generator.seed, "random seed");
  g->add_option("--labeling", labeling, "planted or simulated")->check(CLI::IsMember({"planted", "simulated"}));
  g->add_option("-T,--threshold", gen.generator.threshold, "subjects needed to label a boundary");
  g->add_flag("--no-test", no_test, "training narratives only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? cli::kOk : cli::kConfigError;
  }

  if (*f)
    return cli::guarded([&] { cli::cmd_features(resolve(features), features.set, out_path(features), std::cout); },
                        std::cerr);
  if (*s)
    return cli::guarded([&] { cli::cmd_segment(resolve(segment), segment.set, out_path(segment), std::cout); },
                        std::cerr);
  if (*t) return cli::guarded([&] { cli::cmd_train(resolve(train), out_path(train), std::cout); }, std::cerr);
  if (*x) return cli::guarded([&] { cli::cmd_xval(resolve(xval), out_path(xval), std::cout); }, std::cerr);
  if (*e) return cli::guarded([&] { cli::cmd_eval(resolve(eval), out_path(eval), std::cout); }, std::cerr);
  if (*g)
    return cli::guarded(
        [&] {
          gen.generator.labeling = labeling == "planted" ? narseg::Labeling::planted_rule : narseg::Labeling::simulated;
          gen.with_test_set = !no_test;
          cli::cmd_gen_corpus(gen, gen_out, std::cout);
        },
        std::cerr);
  return cli::kFailure;
}

#pragma once

// Experiment configuration and the batch commands behind the narseg tool.
//
// A config is one JSON document; relative paths resolve against the
// config file's directory. Every command writes deterministic output for a
// given config and corpus, stamped with the config digest.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narseg/coder.hpp"
#include "narseg/corpus.hpp"
#include "narseg/error.hpp"
#include "narseg/eval.hpp"
#include "narseg/induce.hpp"
#include "narseg/segmenter.hpp"
#include "narseg/synth.hpp"
#include "narseg/tree.hpp"

namespace narseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kParseError = 3, kSchemaError = 4 };

inline constexpr const char* kCorpusRootEnv = "NARSEG_CORPUS_ROOT";

struct NamedLearner {
  std::string name;
  LearnerConfig config;
};

struct ExperimentConfig {
  fs::path corpus_root;
  std::vector<std::string> narratives;  // file stems; empty means every *.ann in corpus_root
  std::vector<std::string> train;       // narrative ids; empty means all
  std::vector<std::string> test;
  int threshold = kDefaultThreshold;
  std::optional<fs::path> lexicon;
  std::string algorithm = "np2";
  LearnerConfig learner;
  std::vector<NamedLearner> learners;  // rows of the learning tables; defaults to {"Learning 1", learner}
  GlobalProMode global_pro_mode = GlobalProMode::static_mode;
  Averaging averaging = Averaging::macro;
  ParseMode parse_mode = ParseMode::strict;
  std::optional<std::size_t> folds;
  std::string report_format = "text";
  std::string tree_format = "text";

  void validate() const {
    std::set<std::string> tr(train.begin(), train.end());
    for (const auto& id : test)
      if (tr.count(id)) throw ConfigError("narrative '" + id + "' is in both the train and test lists");
    if (report_format != "text" && report_format != "json") throw ConfigError("report_format must be text or json");
    if (tree_format != "text" && tree_format != "json") throw ConfigError("tree_format must be text or json");
    if (threshold < 1) throw ConfigError("threshold must be >= 1");
    learner.validate();
    for (const auto& l : learners) l.config.validate();
  }
};

// ---- JSON mapping ----

inline json learner_to_json(const LearnerConfig& c) {
  json features = json::array();
  for (auto f : c.features) features.push_back(feature_name(f));
  return {{"min_instances", c.min_instances},
          {"confidence_factor", c.confidence_factor},
          {"categorical_grouping", grouping_name(c.grouping)},
          {"gain_restriction", gain_restriction_name(c.gain_restriction)},
          {"prune", c.prune},
          {"features", features}};
}

inline LearnerConfig learner_from_json(const json& j, LearnerConfig c = {}) {
  if (!j.is_object()) throw ConfigError("learner settings must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    try {
      if (k == "name") continue;
      if (k == "min_instances") c.min_instances = v.get<int>();
      else if (k == "confidence_factor") c.confidence_factor = v.get<double>();
      else if (k == "categorical_grouping") {
        auto g = parse_grouping(v.get<std::string>());
        if (!g) throw ConfigError("unknown categorical_grouping '" + v.get<std::string>() + "'");
        c.grouping = *g;
      } else if (k == "gain_restriction") {
        auto g = parse_gain_restriction(v.get<std::string>());
        if (!g) throw ConfigError("unknown gain_restriction '" + v.get<std::string>() + "'");
        c.gain_restriction = *g;
      } else if (k == "prune") c.prune = v.get<bool>();
      else if (k == "features") {
        c.features.clear();
        for (const auto& f : v) {
          auto feat = parse_feature(f.get<std::string>());
          if (!feat) throw ConfigError("unknown feature '" + f.get<std::string>() + "'");
          c.features.push_back(*feat);
        }
      } else {
        throw ConfigError("unknown learner setting '" + k + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("learner setting '" + k + "': " + e.what());
    }
  }
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  json learners = json::array();
  for (const auto& l : c.learners) {
    json j = learner_to_json(l.config);
    j["name"] = l.name;
    learners.push_back(j);
  }
  json j{{"corpus_root", c.corpus_root.generic_string()},
         {"narratives", c.narratives},
         {"train", c.train},
         {"test", c.test},
         {"threshold", c.threshold},
         {"algorithm", c.algorithm},
         {"learner", learner_to_json(c.learner)},
         {"learners", learners},
         {"global_pro_mode", global_pro_mode_name(c.global_pro_mode)},
         {"averaging", c.averaging == Averaging::macro ? "macro" : "micro"},
         {"parse_mode", c.parse_mode == ParseMode::strict ? "strict" : "lenient"},
         {"report_format", c.report_format},
         {"tree_format", c.tree_format}};
  j["lexicon"] = c.lexicon ? json(c.lexicon->generic_string()) : json(nullptr);
  j["folds"] = c.folds ? json(*c.folds) : json(nullptr);
  return j;
}

inline ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.corpus_root = base_dir;
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? fs::path(p) : (base_dir / p).lexically_normal();
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    try {
      if (k == "corpus_root") c.corpus_root = resolve(v.get<std::string>());
      else if (k == "narratives") c.narratives = v.get<std::vector<std::string>>();
      else if (k == "train") c.train = v.get<std::vector<std::string>>();
      else if (k == "test") c.test = v.get<std::vector<std::string>>();
      else if (k == "threshold") c.threshold = v.get<int>();
      else if (k == "lexicon") {
        if (!v.is_null()) c.lexicon = resolve(v.get<std::string>());
      } else if (k == "algorithm") c.algorithm = v.get<std::string>();
      else if (k == "learner") c.learner = learner_from_json(v);
      else if (k == "learners") {
        // filled below, once "learner" (their base) is known
      } else if (k == "global_pro_mode") {
        auto m = parse_global_pro_mode(v.get<std::string>());
        if (!m) throw ConfigError("global_pro_mode must be static or dynamic");
        c.global_pro_mode = *m;
      } else if (k == "averaging") {
        auto s = v.get<std::string>();
        if (s != "macro" && s != "micro") throw ConfigError("averaging must be macro or micro");
        c.averaging = s == "macro" ? Averaging::macro : Averaging::micro;
      } else if (k == "parse_mode") {
        auto s = v.get<std::string>();
        if (s != "strict" && s != "lenient") throw ConfigError("parse_mode must be strict or lenient");
        c.parse_mode = s == "strict" ? ParseMode::strict : ParseMode::lenient;
      } else if (k == "folds") {
        if (!v.is_null()) c.folds = v.get<std::size_t>();
      } else if (k == "report_format") c.report_format = v.get<std::string>();
      else if (k == "tree_format") c.tree_format = v.get<std::string>();
      else throw ConfigError("unknown config key '" + k + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + k + "': " + e.what());
    }
  }
  if (j.contains("learners")) {
    const auto& ls = j.at("learners");
    if (!ls.is_array()) throw ConfigError("learners must be an array");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      std::string name = ls[i].is_object() && ls[i].contains("name") && ls[i]["name"].is_string()
                             ? ls[i]["name"].get<std::string>()
                             : "Learning " + std::to_string(i + 1);
      c.learners.push_back({name, learner_from_json(ls[i], c.learner)});
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

inline std::string config_digest(const ExperimentConfig& c) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

// Flag overrides layered over the config file.
struct Overrides {
  std::optional<fs::path> corpus_root;
  std::optional<int> threshold;
  std::optional<fs::path> lexicon;
  std::optional<std::string> algorithm;
  std::optional<int> min_instances;
  std::optional<double> confidence_factor;
  std::optional<std::string> grouping;
  std::optional<std::string> gain_restriction;
  bool no_prune = false;
  std::optional<std::string> global_pro_mode;
  std::optional<std::string> report_format;
  std::optional<std::string> tree_format;
  std::optional<std::size_t> folds;
  std::optional<std::string> averaging;
  bool lenient = false;
};

inline void apply(ExperimentConfig& c, const Overrides& o) {
  if (o.corpus_root) c.corpus_root = *o.corpus_root;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.lexicon) c.lexicon = *o.lexicon;
  if (o.algorithm) c.algorithm = *o.algorithm;
  auto tweak = [&](LearnerConfig& l) {
    if (o.min_instances) l.min_instances = *o.min_instances;
    if (o.confidence_factor) l.confidence_factor = *o.confidence_factor;
    if (o.grouping) {
      auto g = parse_grouping(*o.grouping);
      if (!g) throw ConfigError("unknown grouping '" + *o.grouping + "'");
      l.grouping = *g;
    }
    if (o.gain_restriction) {
      auto g = parse_gain_restriction(*o.gain_restriction);
      if (!g) throw ConfigError("unknown gain restriction '" + *o.gain_restriction + "'");
      l.gain_restriction = *g;
    }
    if (o.no_prune) l.prune = false;
  };
  tweak(c.learner);
  if (o.global_pro_mode) {
    auto m = parse_global_pro_mode(*o.global_pro_mode);
    if (!m) throw ConfigError("global_pro_mode must be static or dynamic");
    c.global_pro_mode = *m;
  }
  if (o.report_format) c.report_format = *o.report_format;
  if (o.tree_format) c.tree_format = *o.tree_format;
  if (o.folds) c.folds = *o.folds;
  if (o.averaging) {
    if (*o.averaging != "macro" && *o.averaging != "micro") throw ConfigError("averaging must be macro or micro");
    c.averaging = *o.averaging == "macro" ? Averaging::macro : Averaging::micro;
  }
  if (o.lenient) c.parse_mode = ParseMode::lenient;
  c.validate();
}

// Config for running without a config file: corpus from the flag or the
// environment, everything else default.
inline ExperimentConfig default_config() {
  ExperimentConfig c;
  if (const char* root = std::getenv(kCorpusRootEnv)) c.corpus_root = root;
  else c.corpus_root = ".";
  return c;
}

// ---- corpus loading ----

struct LoadedCorpus {
  std::vector<Narrative> narratives;
  CoderConfig coder;
  std::vector<ParseWarning> warnings;

  const Narrative& get(const std::string& id) const {
    for (const auto& n : narratives)
      if (n.id() == id) return n;
    throw ConfigError("unknown narrative id '" + id + "'");
  }

  std::vector<Narrative> select(const std::vector<std::string>& ids) const {
    std::vector<Narrative> out;
    for (const auto& id : ids) out.push_back(get(id));
    return out;
  }
};

inline std::vector<std::string> discover_stems(const fs::path& root) {
  if (!fs::is_directory(root)) throw ConfigError("corpus root " + root.string() + " is not a directory");
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".ann") stems.push_back(e.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

inline LoadedCorpus load_corpus(const ExperimentConfig& c) {
  LoadedCorpus corpus;
  corpus.coder.threshold = c.threshold;
  corpus.coder.global_pro_mode = c.global_pro_mode;
  if (c.lexicon) corpus.coder.lexicon = CueLexicon::load(*c.lexicon);

  auto stems = c.narratives.empty() ? discover_stems(c.corpus_root) : c.narratives;
  if (stems.empty()) throw ConfigError("no narratives found under " + c.corpus_root.string());
  for (const auto& stem : stems) {
    fs::path txt = c.corpus_root / (stem + ".txt");
    fs::path ann = c.corpus_root / (stem + ".ann");
    if (!fs::exists(txt)) throw ConfigError("missing transcript " + txt.string());
    if (!fs::exists(ann)) throw ConfigError("missing annotations " + ann.string());
    corpus.narratives.push_back(load_narrative(txt, ann, c.parse_mode, &corpus.warnings));
  }
  std::set<std::string> ids;
  for (const auto& n : corpus.narratives)
    if (!ids.insert(n.id()).second) throw ConfigError("duplicate narrative id '" + n.id() + "'");
  for (const auto& id : c.train) corpus.get(id);
  for (const auto& id : c.test) corpus.get(id);
  return corpus;
}

inline std::vector<std::string> train_ids(const ExperimentConfig& c, const LoadedCorpus& corpus) {
  if (!c.train.empty()) return c.train;
  std::vector<std::string> ids;
  for (const auto& n : corpus.narratives)
    if (std::find(c.test.begin(), c.test.end(), n.id()) == c.test.end()) ids.push_back(n.id());
  return ids;
}

// ---- algorithms ----

struct Algorithm {
  enum class Kind { np1, np2, tree } kind = Kind::np2;
  DecisionTree tree;
  std::string name;
};

inline DecisionTree load_tree(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tree file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return path.extension() == ".json" ? parse_tree_json(buf.str()) : parse_tree_text(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line(), path.string());
  }
}

inline void save_tree(const DecisionTree& t, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << (path.extension() == ".json" ? emit_tree_json(t) : emit_tree_text(t));
}

inline Algorithm resolve_algorithm(const std::string& selector) {
  Algorithm a;
  a.name = selector;
  if (selector == "np1") a.kind = Algorithm::Kind::np1;
  else if (selector == "np2") a.kind = Algorithm::Kind::np2;
  else if (selector == "builtin" || selector == "builtin-expanded") {
    a.kind = Algorithm::Kind::tree;
    a.tree = builtin_tree(selector == "builtin-expanded");
  } else if (selector.rfind("tree:", 0) == 0) {
    a.kind = Algorithm::Kind::tree;
    a.tree = load_tree(selector.substr(5));
  } else {
    throw ConfigError("unknown algorithm '" + selector + "' (np1, np2, builtin, builtin-expanded, tree:<path>)");
  }
  return a;
}

inline Segmentation run_algorithm(const Algorithm& a, const Narrative& n, const CoderConfig& coder) {
  switch (a.kind) {
    case Algorithm::Kind::np1: return np_condition1(n);
    case Algorithm::Kind::np2: return np_condition2(n, coder.lexicon);
    case Algorithm::Kind::tree:
      if (coder.global_pro_mode == GlobalProMode::dynamic_mode) return apply_tree_dynamic(a.tree, n, coder);
      return apply_tree(a.tree, code_narrative(n, coder));
  }
  return {};
}

inline AggregateReport score_algorithm(const Algorithm& a, std::span<const Narrative> narratives,
                                       const CoderConfig& coder, Averaging averaging,
                                       std::vector<Segmentation>* segmentations = nullptr) {
  std::vector<ScoredItem> items;
  for (const auto& n : narratives) {
    auto seg = run_algorithm(a, n, coder);
    items.push_back(score_segmentation(seg, label_sites(n.subjects(), coder.threshold)));
    if (segmentations) segmentations->push_back(std::move(seg));
  }
  return aggregate(std::move(items), averaging);
}

// ---- report documents ----

struct ReportTable {
  std::string caption;
  std::vector<ReportRow> rows;
  bool per_item = false;
};

struct Report {
  std::string title;
  std::string digest;
  std::vector<std::string> notes;
  std::vector<ReportTable> tables;

  std::string render(const std::string& format) const {
    if (format == "json") {
      json tables_json = json::array();
      for (const auto& t : tables) {
        json rows = json::array();
        for (const auto& r : t.rows) rows.push_back({{"name", r.name}, {"report", report_to_json(r.report)}});
        tables_json.push_back({{"caption", t.caption}, {"rows", rows}});
      }
      return json{{"title", title}, {"config_digest", digest}, {"notes", notes}, {"tables", tables_json}}.dump(2) +
             "\n";
    }
    std::string out = "# " + title + "\n# config digest: " + digest + "\n";
    for (const auto& n : notes) out += "# " + n + "\n";
    for (const auto& t : tables) out += "\n" + format_table(t.caption, t.rows, t.per_item);
    return out;
  }
};

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

inline std::string report_extension(const ExperimentConfig& c) { return c.report_format == "json" ? ".json" : ".txt"; }
inline std::string tree_extension(const ExperimentConfig& c) { return c.tree_format == "json" ? ".json" : ".tree"; }

inline std::vector<Narrative> narratives_for(const std::string& set, const ExperimentConfig& c,
                                             const LoadedCorpus& corpus) {
  if (set == "all") return corpus.narratives;
  if (set == "train") return corpus.select(train_ids(c, corpus));
  if (set == "test") {
    if (c.test.empty()) throw ConfigError("config has no test narratives");
    return corpus.select(c.test);
  }
  throw ConfigError("narrative set must be train, test or all");
}

// ---- commands ----

// Feature table for the selected narratives; to `out_file` or `out`.
inline void cmd_features(const ExperimentConfig& c, const std::string& set, const std::optional<fs::path>& out_file,
                         std::ostream& out) {
  auto corpus = load_corpus(c);
  std::vector<SiteRecord> records;
  for (const auto& n : narratives_for(set, c, corpus)) {
    auto r = code_narrative(n, corpus.coder);
    records.insert(records.end(), r.begin(), r.end());
  }
  std::ostringstream table;
  table << "# config digest: " << config_digest(c) << "\n";
  write_feature_table(table, records, {c.global_pro_mode, c.threshold});
  if (out_file) write_file(*out_file, table.str());
  else out << table.str();
}

inline std::string format_segmentations(const std::vector<Segmentation>& segs) {
  std::string s;
  for (const auto& seg : segs) {
    s += seg.narrative_id + ":";
    for (auto site : seg.boundary_sites()) s += " " + std::to_string(site);
    s += "\n";
  }
  return s;
}

inline void cmd_segment(const ExperimentConfig& c, const std::string& set, const std::optional<fs::path>& out_dir,
                        std::ostream& out) {
  auto corpus = load_corpus(c);
  auto algorithm = resolve_algorithm(c.algorithm);
  auto narratives = narratives_for(set, c, corpus);
  std::vector<Segmentation> segs;
  auto agg = score_algorithm(algorithm, narratives, corpus.coder, c.averaging, &segs);
  Report report{"segment " + c.algorithm + " on " + set, config_digest(c), {}, {}};
  report.tables.push_back({"Performance of " + c.algorithm + " (" + set + " set).", {{c.algorithm, agg}}, true});
  const std::string rendered = report.render(c.report_format);
  if (out_dir) {
    write_file(*out_dir / "segmentation.txt", "# config digest: " + config_digest(c) + "\n" + format_segmentations(segs));
    write_file(*out_dir / ("report" + report_extension(c)), rendered);
  }
  out << rendered;
}

inline void cmd_train(const ExperimentConfig& c, const std::optional<fs::path>& out_dir, std::ostream& out) {
  auto corpus = load_corpus(c);
  auto train = code_corpus(corpus.select(train_ids(c, corpus)), corpus.coder);
  std::vector<SiteRecord> records;
  for (const auto& cn : train) records.insert(records.end(), cn.records.begin(), cn.records.end());
  auto tree = learn_tree(records, c.learner);

  Report report{"train", config_digest(c), {}, {}};
  report.notes.push_back("learned tree: " + std::to_string(tree::node_count(tree.root)) + " nodes, " +
                         std::to_string(tree::leaf_count(tree.root)) + " leaves, " + std::to_string(records.size()) +
                         " training sites");
  report.tables.push_back({"Performance on training set.", {{"Learned tree", evaluate_tree(tree, train, c.averaging)}}, true});
  if (!c.test.empty()) {
    auto test = code_corpus(corpus.select(c.test), corpus.coder);
    report.tables.push_back({"Performance on test set.", {{"Learned tree", evaluate_tree(tree, test, c.averaging)}}, true});
  }
  const std::string rendered = report.render(c.report_format);
  if (out_dir) {
    save_tree(tree, *out_dir / ("tree" + tree_extension(c)));
    write_file(*out_dir / ("report" + report_extension(c)), rendered);
  }
  out << rendered;
}

inline std::string fold_file_name(std::size_t index, const ExperimentConfig& c) {
  std::string num = std::to_string(index);
  if (num.size() < 2) num.insert(0, 2 - num.size(), '0');
  return "fold" + num + tree_extension(c);
}

inline void cmd_xval(const ExperimentConfig& c, const std::optional<fs::path>& out_dir, std::ostream& out) {
  auto corpus = load_corpus(c);
  auto narratives = corpus.select(train_ids(c, corpus));
  if (narratives.size() < 2) throw ConfigError("cross-validation needs at least 2 narratives");
  auto coded = code_corpus(narratives, corpus.coder);
  auto cv = cross_validate(coded, c.learner, c.folds, c.averaging);

  Report report{"xval", config_digest(c), {}, {}};
  for (const auto& f : cv.folds) {
    std::string ids;
    for (const auto& id : f.test_ids) ids += (ids.empty() ? "" : ",") + id;
    report.notes.push_back("fold " + std::to_string(f.index) + ": train " + std::to_string(f.train_ids.size()) +
                           " narratives (" + std::to_string(f.train_sites) + " sites), test " + ids + " (" +
                           std::to_string(f.test_sites) + " sites)");
  }
  report.tables.push_back({"Using " + std::to_string(cv.folds.size()) + "-fold cross-validation.",
                           {{"Learned trees", cv.report}}, true});
  const std::string rendered = report.render(c.report_format);
  if (out_dir) {
    for (const auto& f : cv.folds) save_tree(f.tree, *out_dir / fold_file_name(f.index, c));
    write_file(*out_dir / ("report" + report_extension(c)), rendered);
  }
  out << rendered;
}

// The full experiment: human baseline, the two NP conditions and the
// learned trees on the training and test sets, and cross-validation.
inline Report build_full_report(const ExperimentConfig& c, const LoadedCorpus& corpus,
                                std::vector<std::pair<std::string, DecisionTree>>* trees = nullptr) {
  auto train = corpus.select(train_ids(c, corpus));
  auto test = c.test.empty() ? std::vector<Narrative>{} : corpus.select(c.test);
  std::vector<NamedLearner> learners = c.learners;
  if (learners.empty()) learners.push_back({"Learning 1", c.learner});

  Report report{"eval", config_digest(c), {}, {}};
  report.notes.push_back("global_pro_mode=" + std::string(global_pro_mode_name(c.global_pro_mode)) +
                         " threshold=" + std::to_string(c.threshold) + " averaging=" +
                         (c.averaging == Averaging::macro ? "macro" : "micro"));
  report.notes.push_back("train: " + std::to_string(train.size()) + " narratives, test: " +
                         std::to_string(test.size()) + " narratives");

  auto has_subjects = [](const std::vector<Narrative>& ns) {
    return !ns.empty() && std::all_of(ns.begin(), ns.end(), [](const Narrative& n) {
             return n.subjects().subject_sites.has_value();
           });
  };
  ReportTable human{"Average human performance.", {}, false};
  if (has_subjects(train)) human.rows.push_back({"Training Set", human_performance(train, c.threshold, c.averaging)});
  if (has_subjects(test)) human.rows.push_back({"Test Set", human_performance(test, c.threshold, c.averaging)});
  if (human.rows.empty()) report.notes.push_back("no per-subject marks: human performance table omitted");
  else report.tables.push_back(std::move(human));

  const auto np1 = resolve_algorithm("np1"), np2 = resolve_algorithm("np2");
  report.tables.push_back({"Performance on training set.",
                           {{"Condition 1", score_algorithm(np1, train, corpus.coder, c.averaging)},
                            {"Condition 2", score_algorithm(np2, train, corpus.coder, c.averaging)}}});
  if (!test.empty())
    report.tables.push_back({"Performance on test set.",
                             {{"Condition 1", score_algorithm(np1, test, corpus.coder, c.averaging)},
                              {"Condition 2", score_algorithm(np2, test, corpus.coder, c.averaging)}}});
  else
    report.notes.push_back("no test narratives: hold-out tables omitted");

  auto coded_train = code_corpus(train, corpus.coder);
  auto coded_test = code_corpus(test, corpus.coder);
  std::vector<SiteRecord> records;
  for (const auto& cn : coded_train) records.insert(records.end(), cn.records.begin(), cn.records.end());

  ReportTable learn_train{"Performance on training set.", {}, false};
  ReportTable learn_test{"Performance on test set.", {}, false};
  ReportTable learn_xval{"Using cross-validation.", {}, false};
  for (const auto& l : learners) {
    auto t = learn_tree(records, l.config);
    Algorithm a{Algorithm::Kind::tree, t, l.name};
    learn_train.rows.push_back({l.name, score_algorithm(a, train, corpus.coder, c.averaging)});
    if (!test.empty()) learn_test.rows.push_back({l.name, score_algorithm(a, test, corpus.coder, c.averaging)});
    if (coded_train.size() >= 2) {
      auto cv = cross_validate(coded_train, l.config, c.folds, c.averaging);
      learn_xval.caption = "Using " + std::to_string(cv.folds.size()) + "-fold cross-validation.";
      learn_xval.rows.push_back({l.name, cv.report});
    }
    if (trees) trees->emplace_back(l.name, std::move(t));
  }
  report.tables.push_back(std::move(learn_train));
  if (!test.empty()) report.tables.push_back(std::move(learn_test));
  if (!learn_xval.rows.empty()) report.tables.push_back(std::move(learn_xval));
  else report.notes.push_back("fewer than 2 training narratives: cross-validation omitted");
  return report;
}

inline void cmd_eval(const ExperimentConfig& c, const std::optional<fs::path>& out_dir, std::ostream& out) {
  auto corpus = load_corpus(c);
  std::vector<std::pair<std::string, DecisionTree>> trees;
  auto report = build_full_report(c, corpus, &trees);
  const std::string rendered = report.render(c.report_format);
  if (out_dir) {
    for (std::size_t i = 0; i < trees.size(); ++i)
      save_tree(trees[i].second, *out_dir / ("learning" + std::to_string(i + 1) + tree_extension(c)));
    write_file(*out_dir / ("report" + report_extension(c)), rendered);
  }
  out << rendered;
}

struct GenOptions {
  GeneratorConfig generator;
  bool with_test_set = true;  // five extra narratives at the published test sizes
};

// Writes <id>.txt, <id>.ann and a config.json naming the train/test split.
inline void cmd_gen_corpus(const GenOptions& o, const fs::path& out_dir, std::ostream& out) {
  fs::create_directories(out_dir);
  GeneratorConfig g = o.generator;
  auto train = generate_corpus(g);
  std::vector<Narrative> test;
  if (o.with_test_set) {
    GeneratorConfig t = g;
    t.seed = g.seed + 1000003;
    t.phrase_counts = reference_test_sizes();
    t.first_id = g.first_id + g.phrase_counts.size();
    test = generate_corpus(t);
  }
  json cfg{{"corpus_root", "."},
           {"threshold", g.threshold},
           {"algorithm", "np2"},
           {"global_pro_mode", "static"},
           {"learners",
            json::array({json{{"name", "Learning 1"}},
                         json{{"name", "Learning 2"}, {"categorical_grouping", "subset_search"}}})}};
  json tr = json::array(), te = json::array();
  std::size_t sites = 0;
  for (const auto& n : train) {
    write_file(out_dir / (n.id() + ".txt"), emit_transcript(n));
    write_file(out_dir / (n.id() + ".ann"), emit_annotations(n));
    tr.push_back(n.id());
    sites += n.site_count();
  }
  for (const auto& n : test) {
    write_file(out_dir / (n.id() + ".txt"), emit_transcript(n));
    write_file(out_dir / (n.id() + ".ann"), emit_annotations(n));
    te.push_back(n.id());
  }
  cfg["train"] = tr;
  cfg["test"] = te;
  write_file(out_dir / "config.json", cfg.dump(2) + "\n");
  out << "wrote " << train.size() << " training narratives (" << sites << " sites) and " << test.size()
      << " test narratives to " << out_dir.string() << "\n";
}

// Runs a command, mapping failures to exit codes and messages on `err`.
inline int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kSchemaError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace narseg::cli

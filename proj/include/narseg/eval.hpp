#pragma once

// Information-retrieval scoring of segmentations, per-narrative aggregation,
// human-subject baselines and narrative-grouped cross-validation.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narseg/coder.hpp"
#include "narseg/corpus.hpp"
#include "narseg/error.hpp"
#include "narseg/induce.hpp"
#include "narseg/schema.hpp"
#include "narseg/segmenter.hpp"
#include "narseg/text.hpp"

namespace narseg {

// Rows: algorithm boundary / non-boundary. Columns: subjects boundary / non-boundary.
struct ConfusionCounts {
  std::size_t a = 0;  // both boundary
  std::size_t b = 0;  // algorithm boundary, subjects non-boundary
  std::size_t c = 0;  // algorithm non-boundary, subjects boundary
  std::size_t d = 0;  // both non-boundary

  std::size_t total() const { return a + b + c + d; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    a += o.a;
    b += o.b;
    c += o.c;
    d += o.d;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct IrScores {
  double recall = 0.0;
  double precision = 0.0;
  double fallout = 0.0;
  double error = 0.0;
  double summed_deviation = 0.0;

  bool operator==(const IrScores&) const = default;
};

inline ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> gold) {
  if (predicted.size() != gold.size())
    throw SchemaError("segmentation has " + std::to_string(predicted.size()) + " sites, gold has " +
                      std::to_string(gold.size()));
  ConfusionCounts k;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predicted[i] == Label::boundary, g = gold[i] == Label::boundary;
    if (p && g) ++k.a;
    else if (p) ++k.b;
    else if (g) ++k.c;
    else ++k.d;
  }
  return k;
}

// Undefined ratios score ideally: recall 1 with no target boundaries,
// precision 1 with no hypothesized boundaries, fallout 0 with no non-boundaries.
inline IrScores metrics(const ConfusionCounts& k) {
  if (k.total() == 0) throw std::invalid_argument("cannot score an empty confusion table");
  const auto a = static_cast<double>(k.a), b = static_cast<double>(k.b), c = static_cast<double>(k.c),
             d = static_cast<double>(k.d);
  IrScores s;
  s.recall = (k.a + k.c) == 0 ? 1.0 : a / (a + c);
  s.precision = (k.a + k.b) == 0 ? 1.0 : a / (a + b);
  s.fallout = (k.b + k.d) == 0 ? 0.0 : b / (b + d);
  s.error = (b + c) / (a + b + c + d);
  s.summed_deviation = (1 - s.recall) + (1 - s.precision) + s.fallout + s.error;
  return s;
}

inline IrScores score(std::span<const Label> predicted, std::span<const Label> gold) {
  return metrics(confusion(predicted, gold));
}

enum class Averaging { macro, micro };

struct ScoredItem {
  std::string name;  // narrative id, fold, or subject
  ConfusionCounts counts;
  IrScores scores;
};

struct AggregateReport {
  std::vector<ScoredItem> items;
  IrScores mean;
  IrScores stddev;
  Averaging averaging = Averaging::macro;
};

namespace detail {

inline std::array<double IrScores::*, 5> metric_members() {
  return {&IrScores::recall, &IrScores::precision, &IrScores::fallout, &IrScores::error, &IrScores::summed_deviation};
}

}  // namespace detail

// Unweighted mean and sample standard deviation of each metric over items.
// Micro averaging replaces the mean with the metrics of the pooled counts.
inline AggregateReport aggregate(std::vector<ScoredItem> items, Averaging averaging = Averaging::macro) {
  if (items.empty()) throw std::invalid_argument("nothing to aggregate");
  AggregateReport r;
  r.items = std::move(items);
  r.averaging = averaging;
  const double n = static_cast<double>(r.items.size());
  for (auto m : detail::metric_members()) {
    double sum = 0.0;
    for (const auto& it : r.items) sum += it.scores.*m;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& it : r.items) ss += (it.scores.*m - mean) * (it.scores.*m - mean);
    r.mean.*m = mean;
    r.stddev.*m = r.items.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  }
  if (averaging == Averaging::micro) {
    ConfusionCounts pooled;
    for (const auto& it : r.items) pooled += it.counts;
    r.mean = metrics(pooled);
  }
  return r;
}

// Each subject's own boundaries scored against the thresholded gold labels.
inline std::vector<ScoredItem> score_subjects(const Narrative& n, int threshold = kDefaultThreshold) {
  const auto& s = n.subjects();
  if (!s.subject_sites) throw SchemaError("narrative " + n.id() + " has no per-subject boundary data");
  auto gold = label_sites(s, threshold);
  std::vector<ScoredItem> out;
  for (std::size_t k = 0; k < s.subject_sites->size(); ++k) {
    std::vector<Label> pred(n.site_count(), Label::non_boundary);
    for (auto site : (*s.subject_sites)[k]) pred.at(site - 1) = Label::boundary;
    auto counts = confusion(pred, gold);
    out.push_back({n.id() + "/subject" + std::to_string(k + 1), counts, metrics(counts)});
  }
  return out;
}

// Subject scores averaged within each narrative, then across narratives.
inline AggregateReport human_performance(std::span<const Narrative> narratives, int threshold = kDefaultThreshold,
                                         Averaging averaging = Averaging::macro) {
  std::vector<ScoredItem> per_narrative;
  for (const auto& n : narratives) {
    auto subjects = aggregate(score_subjects(n, threshold));
    ScoredItem item{n.id(), {}, subjects.mean};
    for (const auto& s : subjects.items) item.counts += s.counts;
    per_narrative.push_back(std::move(item));
  }
  return aggregate(std::move(per_narrative), averaging);
}

struct CodedNarrative {
  std::string id;
  std::vector<SiteRecord> records;
};

inline std::vector<CodedNarrative> code_corpus(std::span<const Narrative> narratives, const CoderConfig& config = {}) {
  std::vector<CodedNarrative> out;
  out.reserve(narratives.size());
  for (const auto& n : narratives) out.push_back({n.id(), code_narrative(n, config)});
  return out;
}

inline std::vector<CodedNarrative> group_records(std::span<const SiteRecord> records) {
  std::vector<CodedNarrative> out;
  for (auto& g : group_by_narrative(records)) {
    auto id = g.front().narrative_id;
    out.push_back({std::move(id), std::move(g)});
  }
  return out;
}

inline ScoredItem score_segmentation(const Segmentation& s, std::span<const Label> gold) {
  auto counts = confusion(s.decisions, gold);
  return {s.narrative_id, counts, metrics(counts)};
}

// Scores one tree on each coded narrative.
inline AggregateReport evaluate_tree(const DecisionTree& t, std::span<const CodedNarrative> corpus,
                                     Averaging averaging = Averaging::macro) {
  std::vector<ScoredItem> items;
  for (const auto& cn : corpus) {
    if (cn.records.empty()) throw SchemaError("narrative " + cn.id + " has no sites");
    auto seg = apply_tree(t, cn.records);
    seg.narrative_id = cn.id;
    items.push_back(score_segmentation(seg, gold_labels(cn.records)));
  }
  return aggregate(std::move(items), averaging);
}

struct Fold {
  std::size_t index = 0;  // 1-based
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::size_t train_sites = 0;
  std::size_t test_sites = 0;
  DecisionTree tree;
  AggregateReport test_report;
};

struct CrossValidation {
  std::vector<Fold> folds;
  AggregateReport report;  // one item per fold
};

// Grouped k-fold: narrative i (input order) is held out in fold (i mod k)+1.
// Each fold learns from scratch on the other folds. k defaults to the
// number of narratives (leave one narrative out).
inline CrossValidation cross_validate(std::span<const CodedNarrative> corpus, const LearnerConfig& learner = {},
                                      std::optional<std::size_t> k = std::nullopt,
                                      Averaging averaging = Averaging::macro) {
  const std::size_t folds = k.value_or(corpus.size());
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (folds > corpus.size())
    throw ConfigError("cannot make " + std::to_string(folds) + " folds from " + std::to_string(corpus.size()) +
                      " narratives");
  std::size_t total_sites = 0;
  for (const auto& cn : corpus) {
    if (cn.records.empty()) throw ConfigError("narrative " + cn.id + " has no sites");
    for (const auto& other : corpus)
      if (&other != &cn && other.id == cn.id) throw ConfigError("duplicate narrative id " + cn.id);
    total_sites += cn.records.size();
  }

  CrossValidation cv;
  std::vector<ScoredItem> fold_items;
  for (std::size_t f = 0; f < folds; ++f) {
    Fold fold;
    fold.index = f + 1;
    std::vector<SiteRecord> train;
    std::vector<CodedNarrative> test;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (i % folds == f) {
        fold.test_ids.push_back(corpus[i].id);
        fold.test_sites += corpus[i].records.size();
        test.push_back(corpus[i]);
      } else {
        fold.train_ids.push_back(corpus[i].id);
        fold.train_sites += corpus[i].records.size();
        train.insert(train.end(), corpus[i].records.begin(), corpus[i].records.end());
      }
    }
    for (const auto& id : fold.test_ids)
      if (std::find(fold.train_ids.begin(), fold.train_ids.end(), id) != fold.train_ids.end())
        throw std::logic_error("fold " + std::to_string(fold.index) + " trains and tests on " + id);
    for (const auto& r : train)
      if (std::find(fold.test_ids.begin(), fold.test_ids.end(), r.narrative_id) != fold.test_ids.end())
        throw std::logic_error("fold " + std::to_string(fold.index) + " training data contains a test site");
    if (fold.train_sites + fold.test_sites != total_sites)
      throw std::logic_error("fold " + std::to_string(fold.index) + " does not partition the sites");

    fold.tree = learn_tree(train, learner);
    fold.test_report = evaluate_tree(fold.tree, test, averaging);

    ScoredItem item{"fold " + std::to_string(fold.index), {}, fold.test_report.mean};
    for (const auto& it : fold.test_report.items) item.counts += it.counts;
    fold_items.push_back(std::move(item));
    cv.folds.push_back(std::move(fold));
  }
  cv.report = aggregate(std::move(fold_items), averaging);
  return cv;
}

// ---- report rendering ----

// Two decimals without the leading zero, as in printed result tables.
inline std::string table_number(double v) {
  std::string s = text::fixed(v, 2);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

struct ReportRow {
  std::string name;
  AggregateReport report;
};

inline std::string format_table(const std::string& caption, std::span<const ReportRow> rows,
                                bool per_item = false) {
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto lpad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::size_t w0 = 12;
  for (const auto& r : rows) w0 = std::max(w0, r.name.size() + 2);
  if (per_item)
    for (const auto& r : rows)
      for (const auto& it : r.report.items) w0 = std::max(w0, it.name.size() + 4);
  auto line = [&](const std::string& name, const IrScores& s) {
    return pad(name, w0) + lpad(table_number(s.recall), 7) + lpad(table_number(s.precision), 7) +
           lpad(table_number(s.fallout), 7) + lpad(table_number(s.error), 7) +
           lpad(table_number(s.summed_deviation), 8) + "\n";
  };
  std::string out = caption + "\n";
  out += pad("Average", w0) + lpad("Recall", 7) + lpad("Prec", 7) + lpad("Fall", 7) + lpad("Error", 7) +
         lpad("SumDev", 8) + "\n";
  for (const auto& r : rows) {
    if (per_item)
      for (const auto& it : r.report.items) out += line("  " + it.name, it.scores);
    out += line(r.name, r.report.mean);
    out += line("Std. Dev.", r.report.stddev);
  }
  return out;
}

inline nlohmann::json scores_to_json(const IrScores& s) {
  return {{"recall", s.recall},
          {"precision", s.precision},
          {"fallout", s.fallout},
          {"error", s.error},
          {"summed_deviation", s.summed_deviation}};
}

inline nlohmann::json report_to_json(const AggregateReport& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : r.items)
    items.push_back({{"name", it.name},
                     {"counts", {{"a", it.counts.a}, {"b", it.counts.b}, {"c", it.counts.c}, {"d", it.counts.d}}},
                     {"scores", scores_to_json(it.scores)}});
  return {{"averaging", r.averaging == Averaging::macro ? "macro" : "micro"},
          {"mean", scores_to_json(r.mean)},
          {"stddev", scores_to_json(r.stddev)},
          {"items", items}};
}

}  // namespace narseg

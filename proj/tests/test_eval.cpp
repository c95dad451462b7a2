#include <gtest/gtest.h>

#include <random>
#include <set>

#include "narseg/eval.hpp"
#include "narseg/synth.hpp"
#include "support.hpp"

using namespace narseg;

namespace {

std::vector<Label> labels(const std::string& bits) {
  std::vector<Label> out;
  for (char c : bits) out.push_back(c == '1' ? Label::boundary : Label::non_boundary);
  return out;
}

std::vector<CodedNarrative> planted_corpus(std::uint64_t seed) {
  GeneratorConfig g;
  g.seed = seed;
  return code_corpus(generate_corpus(g));
}

}  // namespace

TEST(Metrics, WorkedExample) {
  auto s = metrics({2, 1, 1, 4});
  EXPECT_NEAR(s.recall, 2.0 / 3, 1e-12);
  EXPECT_NEAR(s.precision, 2.0 / 3, 1e-12);
  EXPECT_NEAR(s.fallout, 0.2, 1e-12);
  EXPECT_NEAR(s.error, 0.25, 1e-12);
  EXPECT_NEAR(s.summed_deviation, 1.0 / 3 + 1.0 / 3 + 0.2 + 0.25, 1e-12);
  EXPECT_EQ(table_number(s.recall), ".67");
  EXPECT_EQ(table_number(s.summed_deviation), "1.12");
}

TEST(Metrics, ZeroDenominators) {
  // no hypothesized boundaries, two missed
  auto s = metrics({0, 0, 2, 5});
  EXPECT_DOUBLE_EQ(s.recall, 0.0);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.fallout, 0.0);
  EXPECT_NEAR(s.error, 2.0 / 7, 1e-12);
  auto none = metrics({0, 0, 0, 3});
  EXPECT_DOUBLE_EQ(none.recall, 1.0);
  EXPECT_DOUBLE_EQ(none.summed_deviation, 0.0);
  auto all = metrics({3, 0, 0, 0});
  EXPECT_DOUBLE_EQ(all.fallout, 0.0);
  EXPECT_THROW(metrics({}), std::invalid_argument);
}

TEST(Metrics, ConfusionCounts) {
  auto k = confusion(labels("1100101"), labels("1010100"));
  EXPECT_EQ(k, (ConfusionCounts{2, 2, 1, 2}));
  auto bad = labels("11");
  auto gold = labels("101");
  EXPECT_THROW(confusion(bad, gold), SchemaError);
}

TEST(Metrics, ErrorZeroIffIdentical) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    std::size_t n = 1 + rng() % 30;
    std::vector<Label> p(n), g(n);
    for (std::size_t j = 0; j < n; ++j) {
      g[j] = rng() % 3 == 0 ? Label::boundary : Label::non_boundary;
      p[j] = rng() % 4 == 0 ? (g[j] == Label::boundary ? Label::non_boundary : Label::boundary) : g[j];
    }
    EXPECT_EQ(score(p, g).error == 0.0, p == g);
  }
}

TEST(Aggregate, MeanAndSampleDeviation) {
  ScoredItem x{"x", {}, {}}, y{"y", {}, {}};
  x.scores.recall = 0.4;
  y.scores.recall = 0.6;
  auto r = aggregate({x, y});
  EXPECT_NEAR(r.mean.recall, 0.5, 1e-12);
  EXPECT_NEAR(r.stddev.recall, 0.1414213562, 1e-9);
  auto one = aggregate({x});
  EXPECT_DOUBLE_EQ(one.stddev.recall, 0.0);
  EXPECT_THROW(aggregate({}), std::invalid_argument);
}

TEST(Aggregate, MicroPoolsCounts) {
  ScoredItem x{"x", {1, 0, 0, 9}, metrics({1, 0, 0, 9})};
  ScoredItem y{"y", {0, 0, 3, 7}, metrics({0, 0, 3, 7})};
  auto macro = aggregate({x, y}, Averaging::macro);
  auto micro = aggregate({x, y}, Averaging::micro);
  EXPECT_NEAR(macro.mean.recall, 0.5, 1e-12);
  EXPECT_NEAR(micro.mean.recall, 0.25, 1e-12);
}

TEST(Human, ExcerptSubjects) {
  auto n = fixtures::excerpt();
  auto items = score_subjects(n, 3);
  ASSERT_EQ(items.size(), 7u);
  // subject 1 marked sites 1, 2, 7; gold is 2 and 7
  EXPECT_EQ(items[0].counts, (ConfusionCounts{2, 1, 0, 4}));
  // subject 6 marked 7 only
  EXPECT_EQ(items[5].counts, (ConfusionCounts{1, 0, 1, 5}));
  std::vector<Narrative> ns(1, n);
  auto h = human_performance(ns, 3);
  EXPECT_GT(h.mean.recall, 0.5);
  EXPECT_LT(h.mean.fallout, 0.1);
}

TEST(Human, RandomSubjectsHaveChanceFallout) {
  // independent subjects marking with p = 0.2; gold takes the busiest sites
  GeneratorConfig g;
  g.labeling = Labeling::simulated;
  auto corpus = generate_corpus(g);
  std::mt19937_64 rng(4);
  std::vector<Narrative> noisy;
  for (const auto& n : corpus) {
    SubjectAnnotation s;
    s.subject_count = 7;
    s.marks_per_site.assign(n.site_count(), 0);
    std::vector<std::vector<std::size_t>> sites(7);
    for (std::size_t site = 1; site <= n.site_count(); ++site)
      for (auto& subj : sites)
        if (rng() % 10 < 2) {
          subj.push_back(site);
          ++s.marks_per_site[site - 1];
        }
    s.subject_sites = sites;
    noisy.emplace_back(n.id(), n.phrases(), n.clauses(), s);
  }
  auto h = human_performance(noisy, 3);
  // E[marks / 7 | at most 2 of 7 marked] with p = 0.2
  EXPECT_NEAR(h.mean.fallout, 0.154, 0.03);
}

TEST(Human, NeedsPerSubjectMarks) {
  auto phrases = parse_transcript("a.\nb.\n");
  SubjectAnnotation s;
  s.marks_per_site = {3};
  Narrative n("x", phrases, {}, s);
  EXPECT_THROW(score_subjects(n), SchemaError);
}

TEST(CrossValidation, LeaveOneOutStructure) {
  auto corpus = planted_corpus(1);
  auto cv = cross_validate(corpus);
  ASSERT_EQ(cv.folds.size(), 10u);
  std::set<std::string> tested;
  for (const auto& f : cv.folds) {
    EXPECT_EQ(f.train_ids.size(), 9u);
    ASSERT_EQ(f.test_ids.size(), 1u);
    EXPECT_EQ(std::count(f.train_ids.begin(), f.train_ids.end(), f.test_ids[0]), 0);
    EXPECT_EQ(f.train_sites + f.test_sites, 1004u);
    tested.insert(f.test_ids[0]);
  }
  EXPECT_EQ(tested.size(), 10u);
}

TEST(CrossValidation, FoldAssignmentModK) {
  auto corpus = planted_corpus(2);
  auto cv = cross_validate(corpus, {}, 3);
  ASSERT_EQ(cv.folds.size(), 3u);
  EXPECT_EQ(cv.folds[0].test_ids, (std::vector<std::string>{"n01", "n04", "n07", "n10"}));
  EXPECT_EQ(cv.folds[2].test_ids, (std::vector<std::string>{"n03", "n06", "n09"}));
  EXPECT_THROW(cross_validate(corpus, {}, 1), ConfigError);
  EXPECT_THROW(cross_validate(corpus, {}, 11), ConfigError);
}

TEST(CrossValidation, PlantedRulePerfect) {
  auto cv = cross_validate(planted_corpus(3));
  EXPECT_DOUBLE_EQ(cv.report.mean.recall, 1.0);
  EXPECT_DOUBLE_EQ(cv.report.mean.precision, 1.0);
  EXPECT_DOUBLE_EQ(cv.report.mean.error, 0.0);
}

TEST(CrossValidation, InvariantToFoldRelabelling) {
  // reversing the corpus with k = n visits the same held-out sets
  auto corpus = planted_corpus(4);
  auto a = cross_validate(corpus);
  std::reverse(corpus.begin(), corpus.end());
  auto b = cross_validate(corpus);
  std::multiset<double> ea, eb;
  for (const auto& it : a.report.items) ea.insert(it.scores.summed_deviation);
  for (const auto& it : b.report.items) eb.insert(it.scores.summed_deviation);
  EXPECT_EQ(ea, eb);
}

TEST(CrossValidation, DuplicateIdsRejected) {
  auto corpus = planted_corpus(5);
  corpus[1].id = corpus[0].id;
  EXPECT_THROW(cross_validate(corpus), ConfigError);
}

TEST(Report, TableLayout) {
  ScoredItem x{"n01", {2, 1, 1, 4}, metrics({2, 1, 1, 4})};
  std::vector<ReportRow> rows = {{"Condition 1", aggregate({x})}};
  auto t = format_table("Performance on training set.", rows, true);
  EXPECT_NE(t.find("Recall"), std::string::npos);
  EXPECT_NE(t.find("Std. Dev."), std::string::npos);
  EXPECT_NE(t.find("  n01"), std::string::npos);
  EXPECT_NE(t.find(".67"), std::string::npos);
  auto j = report_to_json(rows[0].report);
  EXPECT_EQ(j["items"][0]["counts"]["a"], 2);
  EXPECT_EQ(j["averaging"], "macro");
}

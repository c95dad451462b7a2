#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <algorithm>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "narseg/coder.hpp"
#include "narseg/corpus.hpp"
#include "narseg/tree.hpp"

namespace narseg::fixtures {

inline std::string data_path(const std::string& rel) { return std::string(NARSEG_TEST_DATA) + "/" + rel; }

inline Narrative excerpt() { return load_narrative(data_path("excerpt/excerpt.txt"), data_path("excerpt/excerpt.ann")); }

inline std::vector<SiteRecord> builtin_tree_golden() {
  std::ifstream in(data_path("builtin_tree_golden.csv"));
  return read_feature_table(in).records;
}

// Small narrative with a hand-worked NP trace: Condition 1 fires at site 5
// only; Condition 2 fires at 1 (complex cue-prosody), which shrinks the
// segment so site 3 loses its global.pro link, then at 3 and 5.
inline Narrative np_trace_narrative() {
  auto phrases = parse_transcript(
      "The man picks pears.\n"
      "[.8] So he climbs down,\n"
      "and he puts them in the basket.\n"
      "[1.2] A boy comes along.\n"
      "he takes a basket,\n"
      "[.4] Well the goat is surprised.\n");
  std::vector<ClauseAnnotation> c = {
      {1, 1, false, false, {}},
      {2, 2, true, false, {{"he", 1}}},
      {3, 3, true, false, {{"he", 1}, {"them", 1}}},
      {4, 4, false, false, {{"them", 1}}},
      {5, 5, true, false, {{"he", 4}}},
      {6, 6, false, false, {}},
  };
  SubjectAnnotation s;
  s.marks_per_site = {4, 0, 6, 0, 3};
  return Narrative("trace", phrases, c, s);
}

// Random structurally valid tree. Categorical features are not retested on
// a path; duration thresholds are drawn fresh each time.
class TreeMaker {
public:
  explicit TreeMaker(std::uint64_t seed) : rng_(seed) {}

  DecisionTree make() {
    std::vector<Feature> used;
    return DecisionTree{node(0, used)};
  }

private:
  std::mt19937_64 rng_;
  std::vector<double> cuts_;

  int roll(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  Label label() { return roll(2) ? Label::boundary : Label::non_boundary; }

  std::vector<std::string> domain(Feature f) {
    if (f == Feature::word1 || f == Feature::word2) {
      const auto lex = CueLexicon::defaults();
      std::vector<std::string> d(lex.words().begin(), lex.words().end());
      d.push_back("NA");
      return d;
    }
    return fixed_domain(f);
  }

  TreeNode node(int depth, std::vector<Feature>& used) {
    if (depth >= 4 || roll(4) == 0) return tree::leaf(label());
    if (roll(3) == 0) {
      double t = std::uniform_real_distribution<double>(0.0, 3.0)(rng_);
      if (roll(2)) t = roll(300) / 100.0;
      if (std::find(cuts_.begin(), cuts_.end(), t) != cuts_.end()) return tree::leaf(label());
      cuts_.push_back(t);
      auto le = node(depth + 1, used);
      auto gt = node(depth + 1, used);
      cuts_.pop_back();
      return tree::threshold(Feature::duration, t, std::move(le), std::move(gt));
    }
    std::vector<Feature> open;
    for (auto f : kFeatures)
      if (f != Feature::duration && std::find(used.begin(), used.end(), f) == used.end()) open.push_back(f);
    if (open.empty()) return tree::leaf(label());
    Feature f = open[static_cast<std::size_t>(roll(static_cast<int>(open.size())))];
    auto values = domain(f);
    std::shuffle(values.begin(), values.end(), rng_);
    if (roll(3) == 0) values.resize(values.size() - 1);  // leave a value for the default
    const int groups = 1 + roll(static_cast<int>(std::min<std::size_t>(values.size(), 4)));
    std::vector<tree::Branch> branches(static_cast<std::size_t>(groups));
    for (std::size_t i = 0; i < values.size(); ++i)
      branches[i < branches.size() ? i : static_cast<std::size_t>(roll(groups))].values.push_back(values[i]);
    used.push_back(f);
    for (auto& b : branches) {
      std::sort(b.values.begin(), b.values.end());
      b.child = node(depth + 1, used);
    }
    used.pop_back();
    std::optional<Label> def;
    if (roll(2)) def = label();
    return tree::categorical(f, std::move(branches), def);
  }
};

}  // namespace narseg::fixtures

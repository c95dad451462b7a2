#pragma once

// Decision-tree induction over coded sites: gain-ratio split selection with
// C4.5-style defaults and error-based pessimistic pruning.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "narseg/error.hpp"
#include "narseg/schema.hpp"
#include "narseg/tree.hpp"

namespace narseg {

enum class Grouping { per_value, subset_search };
enum class GainRestriction { gain_ratio_over_average_gain, pure_gain_ratio };

struct LearnerConfig {
  int min_instances = 2;
  double confidence_factor = 0.25;
  Grouping grouping = Grouping::per_value;
  GainRestriction gain_restriction = GainRestriction::gain_ratio_over_average_gain;
  bool prune = true;
  std::vector<Feature> features{kFeatures.begin(), kFeatures.end()};

  void validate() const {
    if (min_instances < 1) throw ConfigError("min_instances must be >= 1");
    if (!(confidence_factor > 0.0 && confidence_factor <= 1.0))
      throw ConfigError("confidence_factor must lie in (0, 1]");
    if (features.empty()) throw ConfigError("learner needs at least one feature");
  }
};

inline std::string_view grouping_name(Grouping g) { return g == Grouping::per_value ? "per_value" : "subset_search"; }
inline std::optional<Grouping> parse_grouping(std::string_view s) {
  if (s == "per_value") return Grouping::per_value;
  if (s == "subset_search") return Grouping::subset_search;
  return std::nullopt;
}
inline std::string_view gain_restriction_name(GainRestriction g) {
  return g == GainRestriction::gain_ratio_over_average_gain ? "gain_ratio_over_average_gain" : "pure_gain_ratio";
}
inline std::optional<GainRestriction> parse_gain_restriction(std::string_view s) {
  if (s == "gain_ratio_over_average_gain") return GainRestriction::gain_ratio_over_average_gain;
  if (s == "pure_gain_ratio") return GainRestriction::pure_gain_ratio;
  return std::nullopt;
}

// Two-class entropy in bits.
inline double entropy(double boundary, double non_boundary) {
  if (boundary < 0 || non_boundary < 0) throw std::invalid_argument("class counts must be non-negative");
  const double n = boundary + non_boundary;
  if (n <= 0) throw std::invalid_argument("entropy of an empty set");
  double h = 0.0;
  for (double c : {boundary, non_boundary})
    if (c > 0) h -= (c / n) * std::log2(c / n);
  return h;
}

struct CandidateTest {
  Feature feature = Feature::before;
  NodeKind kind = NodeKind::categorical;
  std::vector<std::vector<std::string>> value_sets;  // categorical
  double threshold = 0.0;                            // threshold

  static CandidateTest categorical(Feature f, std::vector<std::vector<std::string>> sets) {
    return {f, NodeKind::categorical, std::move(sets), 0.0};
  }
  static CandidateTest at(Feature f, double t) { return {f, NodeKind::threshold, {}, t}; }
};

struct SplitScore {
  bool accepted = false;  // false when every record falls in one branch
  double gain = 0.0;
  double gain_ratio = 0.0;
  double split_info = 0.0;
  std::vector<std::size_t> branch_sizes;
};

namespace detail {

struct ClassCounts {
  double boundary = 0;
  double non_boundary = 0;
  double total() const { return boundary + non_boundary; }
  void add(Label l) { (l == Label::boundary ? boundary : non_boundary) += 1; }
};

inline std::size_t branch_of(const CandidateTest& t, const FeatureVector& v) {
  if (t.kind == NodeKind::threshold) return numeric_value(v, t.feature) <= t.threshold ? 0 : 1;
  const std::string value = categorical_value(v, t.feature);
  for (std::size_t k = 0; k < t.value_sets.size(); ++k)
    if (std::find(t.value_sets[k].begin(), t.value_sets[k].end(), value) != t.value_sets[k].end()) return k;
  throw UncoveredValue(t.feature, value);
}

inline SplitScore score_partition(const ClassCounts& parent, const std::vector<ClassCounts>& parts) {
  SplitScore s;
  const double n = parent.total();
  double child = 0.0;
  std::size_t nonempty = 0;
  for (const auto& p : parts) {
    s.branch_sizes.push_back(static_cast<std::size_t>(p.total()));
    if (p.total() <= 0) continue;
    ++nonempty;
    const double w = p.total() / n;
    child += w * entropy(p.boundary, p.non_boundary);
    s.split_info -= w * std::log2(w);
  }
  if (nonempty < 2) return s;
  s.accepted = true;
  s.gain = entropy(parent.boundary, parent.non_boundary) - child;
  s.gain_ratio = s.gain / s.split_info;
  return s;
}

}  // namespace detail

inline SplitScore evaluate_split(std::span<const SiteRecord> records, const CandidateTest& test) {
  if (records.empty()) return {};
  detail::ClassCounts parent;
  std::size_t branches = test.kind == NodeKind::threshold ? 2 : test.value_sets.size();
  std::vector<detail::ClassCounts> parts(branches);
  for (const auto& r : records) {
    parent.add(r.label);
    parts[detail::branch_of(test, r.features)].add(r.label);
  }
  return detail::score_partition(parent, parts);
}

namespace detail {

struct Grower {
  const LearnerConfig& config;

  static Label majority(const ClassCounts& c) {
    return c.boundary > c.non_boundary ? Label::boundary : Label::non_boundary;
  }

  static ClassCounts count(std::span<const SiteRecord* const> rs) {
    ClassCounts c;
    for (auto* r : rs) c.add(r->label);
    return c;
  }

  bool enough_branches(const std::vector<std::size_t>& sizes) const {
    std::size_t ok = 0;
    for (auto s : sizes)
      if (s >= static_cast<std::size_t>(config.min_instances)) ++ok;
    return ok >= 2;
  }

  struct Scored {
    CandidateTest test;
    SplitScore score;
  };

  // Per-value counts for a categorical feature, values in sorted order.
  static std::map<std::string, ClassCounts> value_counts(std::span<const SiteRecord* const> rs, Feature f) {
    std::map<std::string, ClassCounts> m;
    for (auto* r : rs) m[categorical_value(r->features, f)].add(r->label);
    return m;
  }

  static SplitScore score_groups(const ClassCounts& parent, const std::map<std::string, ClassCounts>& counts,
                                 const std::vector<std::vector<std::string>>& groups) {
    std::vector<ClassCounts> parts;
    for (const auto& g : groups) {
      ClassCounts c;
      for (const auto& v : g) {
        const auto& vc = counts.at(v);
        c.boundary += vc.boundary;
        c.non_boundary += vc.non_boundary;
      }
      parts.push_back(c);
    }
    return score_partition(parent, parts);
  }

  std::optional<Scored> categorical_candidate(std::span<const SiteRecord* const> rs, const ClassCounts& parent,
                                              Feature f) const {
    auto counts = value_counts(rs, f);
    if (counts.size() < 2) return std::nullopt;
    std::vector<std::vector<std::string>> groups;
    for (const auto& [v, c] : counts) groups.push_back({v});
    SplitScore best = score_groups(parent, counts, groups);

    if (config.grouping == Grouping::subset_search) {
      // Greedy pairwise merging while the gain ratio improves.
      while (groups.size() > 2) {
        std::optional<std::vector<std::vector<std::string>>> best_groups;
        SplitScore best_merge;
        for (std::size_t a = 0; a < groups.size(); ++a) {
          for (std::size_t b = a + 1; b < groups.size(); ++b) {
            auto merged = groups;
            merged[a].insert(merged[a].end(), merged[b].begin(), merged[b].end());
            std::sort(merged[a].begin(), merged[a].end());
            merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(b));
            auto s = score_groups(parent, counts, merged);
            if (!s.accepted || !enough_branches(s.branch_sizes)) continue;
            if (!best_groups || s.gain_ratio > best_merge.gain_ratio + 1e-12) {
              best_groups = std::move(merged);
              best_merge = s;
            }
          }
        }
        if (!best_groups) break;
        if (best.accepted && enough_branches(best.branch_sizes) && best_merge.gain_ratio <= best.gain_ratio + 1e-12)
          break;
        groups = std::move(*best_groups);
        best = best_merge;
      }
    }
    if (!best.accepted || !enough_branches(best.branch_sizes)) return std::nullopt;
    return Scored{CandidateTest::categorical(f, std::move(groups)), best};
  }

  // Best-gain threshold at an observed value; ties go to the lower threshold.
  std::optional<Scored> threshold_candidate(std::span<const SiteRecord* const> rs, const ClassCounts& parent,
                                            Feature f) const {
    std::vector<std::pair<double, Label>> xs;
    xs.reserve(rs.size());
    for (auto* r : rs) xs.emplace_back(numeric_value(r->features, f), r->label);
    std::sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::optional<Scored> best;
    ClassCounts le;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      le.add(xs[i].second);
      if (xs[i].first == xs[i + 1].first) continue;
      ClassCounts gt{parent.boundary - le.boundary, parent.non_boundary - le.non_boundary};
      auto s = score_partition(parent, {le, gt});
      if (!s.accepted || !enough_branches(s.branch_sizes)) continue;
      if (!best || s.gain > best->score.gain + 1e-12) best = Scored{CandidateTest::at(f, xs[i].first), s};
    }
    return best;
  }

  TreeNode grow(std::span<const SiteRecord* const> rs) const {
    const ClassCounts counts = count(rs);
    TreeNode node = tree::leaf(majority(counts));
    node.cases = counts.total();
    node.errors = node.label == Label::boundary ? counts.non_boundary : counts.boundary;
    if (counts.boundary == 0 || counts.non_boundary == 0) return node;
    if (counts.total() < 2.0 * config.min_instances) return node;

    std::vector<Scored> candidates;
    for (Feature f : kFeatures) {
      if (std::find(config.features.begin(), config.features.end(), f) == config.features.end()) continue;
      auto c = is_continuous(f) ? threshold_candidate(rs, counts, f) : categorical_candidate(rs, counts, f);
      if (c && c->score.gain > 1e-12) candidates.push_back(std::move(*c));
    }
    if (candidates.empty()) return node;

    double floor = -1.0;
    if (config.gain_restriction == GainRestriction::gain_ratio_over_average_gain) {
      double sum = 0.0;
      for (const auto& c : candidates) sum += c.score.gain;
      floor = sum / static_cast<double>(candidates.size()) - 1e-12;
    }
    const Scored* chosen = nullptr;
    for (const auto& c : candidates) {
      if (c.score.gain < floor) continue;
      if (!chosen || c.score.gain_ratio > chosen->score.gain_ratio + 1e-12) chosen = &c;
    }

    const CandidateTest& test = chosen->test;
    std::size_t nb = test.kind == NodeKind::threshold ? 2 : test.value_sets.size();
    std::vector<std::vector<const SiteRecord*>> parts(nb);
    for (auto* r : rs) parts[branch_of(test, r->features)].push_back(r);

    std::vector<TreeNode> children;
    for (auto& p : parts) children.push_back(grow(p));
    TreeNode split;
    if (test.kind == NodeKind::threshold) {
      split = tree::threshold(test.feature, test.threshold, std::move(children[0]), std::move(children[1]));
    } else {
      std::vector<tree::Branch> branches;
      for (std::size_t k = 0; k < nb; ++k) branches.push_back({test.value_sets[k], std::move(children[k])});
      split = tree::categorical(test.feature, std::move(branches), node.label);
    }
    split.label = node.label;
    split.cases = node.cases;
    split.errors = node.errors;
    return split;
  }
};

}  // namespace detail

inline DecisionTree grow_tree(std::span<const SiteRecord> training, const LearnerConfig& config = {}) {
  config.validate();
  if (training.empty()) throw ConfigError("training set is empty");
  std::vector<const SiteRecord*> rs;
  rs.reserve(training.size());
  for (const auto& r : training) rs.push_back(&r);
  return DecisionTree{detail::Grower{config}.grow(rs)};
}

// Normal deviate for a confidence factor, interpolated from the standard
// C4.5 table; 0 at CF = 1 so estimates collapse to observed errors.
inline double pruning_deviate(double cf) {
  static constexpr double val[] = {0, 0.001, 0.005, 0.01, 0.05, 0.10, 0.20, 0.40, 1.00};
  static constexpr double dev[] = {4.0, 3.09, 2.58, 2.33, 1.65, 1.28, 0.84, 0.25, 0.00};
  std::size_t i = 0;
  while (i < 8 && cf > val[i]) ++i;
  if (i == 0) return dev[0];
  return dev[i - 1] + (dev[i] - dev[i - 1]) * (cf - val[i - 1]) / (val[i] - val[i - 1]);
}

// Upper confidence bound on the error count of a leaf with n cases and e errors.
inline double pessimistic_errors(double n, double e, double z) {
  if (n <= 0) return 0.0;
  const double f = e / n;
  const double z2 = z * z;
  const double upper = (f + z2 / (2 * n) + z * std::sqrt(std::max(0.0, f / n - f * f / n + z2 / (4 * n * n)))) /
                       (1 + z2 / n);
  return n * upper;
}

namespace detail {

struct Pruner {
  double z;

  static Label majority(std::span<const SiteRecord* const> rs, Label fallback) {
    double b = 0, nb = 0;
    for (auto* r : rs) (r->label == Label::boundary ? b : nb) += 1;
    if (b + nb == 0) return fallback;
    return b > nb ? Label::boundary : Label::non_boundary;
  }

  static double errors_as(std::span<const SiteRecord* const> rs, Label l) {
    double e = 0;
    for (auto* r : rs) e += r->label != l;
    return e;
  }

  // Routes records to children; records on uncovered values go to `rest`.
  static std::vector<std::vector<const SiteRecord*>> route(const TreeNode& n, std::span<const SiteRecord* const> rs,
                                                           std::vector<const SiteRecord*>& rest) {
    std::vector<std::vector<const SiteRecord*>> parts(n.children.size());
    for (auto* r : rs) {
      if (n.kind == NodeKind::threshold) {
        parts[numeric_value(r->features, n.feature) <= n.threshold ? 0 : 1].push_back(r);
        continue;
      }
      const std::string v = categorical_value(r->features, n.feature);
      bool placed = false;
      for (std::size_t k = 0; k < n.value_sets.size() && !placed; ++k)
        if (std::find(n.value_sets[k].begin(), n.value_sets[k].end(), v) != n.value_sets[k].end()) {
          parts[k].push_back(r);
          placed = true;
        }
      if (!placed) rest.push_back(r);
    }
    return parts;
  }

  // Estimated errors of `n` on `rs` without modifying it.
  double estimate(const TreeNode& n, std::span<const SiteRecord* const> rs) const {
    if (n.kind == NodeKind::leaf) return pessimistic_errors(static_cast<double>(rs.size()), errors_as(rs, n.label), z);
    std::vector<const SiteRecord*> rest;
    auto parts = route(n, rs, rest);
    double total = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) total += estimate(n.children[k], parts[k]);
    if (!rest.empty())
      total += pessimistic_errors(static_cast<double>(rest.size()),
                                  errors_as(rest, n.default_label.value_or(n.label)), z);
    return total;
  }

  // Prunes `n` in place against `rs`; returns its estimated errors.
  double prune(TreeNode& n, std::span<const SiteRecord* const> rs) const {
    const Label maj = majority(rs, n.label);
    n.cases = static_cast<double>(rs.size());
    if (n.kind == NodeKind::leaf) {
      n.label = maj;
      n.errors = errors_as(rs, n.label);
      return pessimistic_errors(n.cases, n.errors, z);
    }
    std::vector<const SiteRecord*> rest;
    auto parts = route(n, rs, rest);
    double subtree = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) subtree += prune(n.children[k], parts[k]);
    if (!rest.empty())
      subtree += pessimistic_errors(static_cast<double>(rest.size()),
                                    errors_as(rest, n.default_label.value_or(maj)), z);

    const double leaf_errors = errors_as(rs, maj);
    const double as_leaf = pessimistic_errors(n.cases, leaf_errors, z);

    std::size_t largest = 0;
    for (std::size_t k = 1; k < parts.size(); ++k)
      if (parts[k].size() > parts[largest].size()) largest = k;
    const double as_branch = estimate(n.children[largest], rs);

    if (as_leaf <= subtree + 0.1 && as_leaf <= as_branch + 0.1) {
      n = tree::leaf(maj);
      n.cases = static_cast<double>(rs.size());
      n.errors = leaf_errors;
      return as_leaf;
    }
    if (as_branch <= subtree + 0.1) {
      TreeNode raised = std::move(n.children[largest]);
      n = std::move(raised);
      return prune(n, rs);
    }
    n.label = maj;
    n.errors = leaf_errors;
    return subtree;
  }
};

}  // namespace detail

inline DecisionTree prune_tree(DecisionTree t, std::span<const SiteRecord> training, const LearnerConfig& config = {}) {
  config.validate();
  std::vector<const SiteRecord*> rs;
  rs.reserve(training.size());
  for (const auto& r : training) rs.push_back(&r);
  detail::Pruner{pruning_deviate(config.confidence_factor)}.prune(t.root, rs);
  return t;
}

// Grow, then prune when the config asks for it.
inline DecisionTree learn_tree(std::span<const SiteRecord> training, const LearnerConfig& config = {}) {
  auto t = grow_tree(training, config);
  return config.prune ? prune_tree(std::move(t), training, config) : t;
}

}  // namespace narseg

#pragma once

// Boundary assignment: the NP rule algorithms and decision-tree application.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "narseg/coder.hpp"
#include "narseg/corpus.hpp"
#include "narseg/error.hpp"
#include "narseg/schema.hpp"
#include "narseg/tree.hpp"

namespace narseg {

struct Segmentation {
  std::string narrative_id;
  std::vector<Label> decisions;  // decisions[i] is site i+1

  std::vector<std::size_t> boundary_sites() const {
    std::vector<std::size_t> sites;
    for (std::size_t i = 0; i < decisions.size(); ++i)
      if (decisions[i] == Label::boundary) sites.push_back(i + 1);
    return sites;
  }

  bool operator==(const Segmentation&) const = default;
};

namespace detail {

// Shared driver for the NP algorithms: global.pro tracks the algorithm's own
// most recent boundary, updated after every site's decision.
template <class Extra>
Segmentation run_np(const Narrative& n, Extra&& extra_fires) {
  Segmentation s{n.id(), {}};
  s.decisions.reserve(n.site_count());
  std::optional<std::size_t> last_boundary;
  for (std::size_t site = 1; site <= n.site_count(); ++site) {
    auto np = code_np(site, n.clauses(), last_boundary);
    bool boundary = np_conjunction(np) || extra_fires(site);
    s.decisions.push_back(boundary ? Label::boundary : Label::non_boundary);
    if (boundary) last_boundary = site;
  }
  return s;
}

}  // namespace detail

// Boundary wherever coref, infer and global.pro are all minus.
inline Segmentation np_condition1(const Narrative& n) {
  return detail::run_np(n, [](std::size_t) { return false; });
}

// Condition 1, plus a boundary wherever cue-prosody is complex.
inline Segmentation np_condition2(const Narrative& n, const CueLexicon& lexicon = CueLexicon::defaults()) {
  return detail::run_np(n, [&](std::size_t site) {
    auto p = code_prosody(n.phrase(site), n.phrase(site + 1));
    auto c = code_cues(n.phrase(site + 1), lexicon);
    return code_cue_prosody(p.before, p.pause, c.cue1, c.word1, c.cue2, c.word2) == CueProsody::complex;
  });
}

// Classifies every record of one narrative. Records must be in site order.
inline Segmentation apply_tree(const DecisionTree& t, std::span<const SiteRecord> records) {
  Segmentation s;
  if (!records.empty()) s.narrative_id = records.front().narrative_id;
  s.decisions.reserve(records.size());
  for (const auto& r : records) {
    try {
      s.decisions.push_back(classify(t, r.features));
    } catch (const UncoveredValue& e) {
      throw SchemaError("narrative " + r.narrative_id + " site " + std::to_string(r.site_index) + ": " + e.what());
    }
  }
  return s;
}

// Tree application with global.pro recomputed from the tree's own decisions.
inline Segmentation apply_tree_dynamic(const DecisionTree& t, const Narrative& n, const CoderConfig& config = {}) {
  auto records = code_narrative(n, config);
  Segmentation s{n.id(), {}};
  std::optional<std::size_t> last_boundary;
  for (auto& r : records) {
    auto np = code_np(r.site_index, n.clauses(), last_boundary);
    r.features.global_pro = np.global_pro;
    Label l;
    try {
      l = classify(t, r.features);
    } catch (const UncoveredValue& e) {
      throw SchemaError("narrative " + r.narrative_id + " site " + std::to_string(r.site_index) + ": " + e.what());
    }
    s.decisions.push_back(l);
    if (l == Label::boundary) last_boundary = r.site_index;
  }
  return s;
}

// Splits a flat record list into per-narrative runs, preserving first-seen order.
inline std::vector<std::vector<SiteRecord>> group_by_narrative(std::span<const SiteRecord> records) {
  std::vector<std::vector<SiteRecord>> groups;
  std::map<std::string, std::size_t> where;
  for (const auto& r : records) {
    auto [it, fresh] = where.try_emplace(r.narrative_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  for (auto& g : groups)
    std::stable_sort(g.begin(), g.end(), [](const SiteRecord& a, const SiteRecord& b) { return a.site_index < b.site_index; });
  return groups;
}

inline std::vector<Label> gold_labels(std::span<const SiteRecord> records) {
  std::vector<Label> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

}  // namespace narseg

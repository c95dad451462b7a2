#pragma once

// Synthetic coded corpora for desk-scale experiments: random transcripts,
// clause annotations, and subject marks driven either by a planted rule or
// by a noisy per-subject simulation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "narseg/coder.hpp"
#include "narseg/corpus.hpp"
#include "narseg/error.hpp"

namespace narseg {

// Phrase counts of the ten training narratives (1014 phrases, 1004 sites)
// and of the five test narratives.
inline const std::vector<std::size_t>& reference_training_sizes() {
  static const std::vector<std::size_t> sizes = {51, 162, 95, 110, 88, 104, 99, 120, 85, 100};
  return sizes;
}

inline const std::vector<std::size_t>& reference_test_sizes() {
  static const std::vector<std::size_t> sizes = {47, 113, 80, 95, 102};
  return sizes;
}

enum class Labeling {
  planted_rule,  // boundary iff before=+sfc, pause and duration > rule_duration
  simulated      // subjects mark sites independently with feature-driven odds
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  std::vector<std::size_t> phrase_counts = reference_training_sizes();
  std::string id_prefix = "n";
  std::size_t first_id = 1;
  int subjects = 7;
  int threshold = kDefaultThreshold;
  Labeling labeling = Labeling::planted_rule;
  double rule_duration = 0.6;
  double clause_rate = 0.76;
};

namespace detail {

// Portable draws from mt19937_64 (the std distributions are implementation-defined).
class Draw {
public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng_() % n); }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

private:
  std::mt19937_64 rng_;
};

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the",  "man",    "pears",  "he",   "picks", "basket", "bicycle", "goat",  "farmer", "falls", "over",
      "looking", "girl", "uh",   "um",   "rides", "down",   "road",    "hat",   "three", "kids",  "ladder",
      "tree", "apron",  "paddle", "ball", "walks", "away",   "eating",  "comes", "back",  "sees",  "it"};
  return words;
}

inline std::string id_for(const GeneratorConfig& c, std::size_t k) {
  std::string num = std::to_string(c.first_id + k);
  if (num.size() < 2) num.insert(0, 2 - num.size(), '0');
  return c.id_prefix + num;
}

}  // namespace detail

inline std::vector<Narrative> generate_corpus(const GeneratorConfig& config) {
  if (config.subjects < 1 || config.threshold < 1 || config.threshold > config.subjects)
    throw ConfigError("generator threshold must lie in [1, subjects]");
  detail::Draw draw(config.seed);
  const auto lexicon = CueLexicon::defaults();
  // only cue words the builtin tree has a branch for
  std::vector<std::string> cues;
  for (const auto& w : lexicon.words())
    if (w != "boy" && w != "right" && w != "still") cues.push_back(w);
  // Pause grid: multiples of 0.05 up to 2.0 seconds.
  std::vector<double> grid;
  for (int k = 1; k <= 40; ++k) grid.push_back((k * 5) / 100.0);

  std::vector<Narrative> corpus;
  for (std::size_t k = 0; k < config.phrase_counts.size(); ++k) {
    const std::size_t n = config.phrase_counts[k];
    if (n < 2) throw ConfigError("generated narratives need at least 2 phrases");
    const std::string id = detail::id_for(config, k);

    std::vector<ProsodicPhrase> phrases(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& p = phrases[i];
      double t = draw.unit();
      p.terminator = t < 0.36 ? '.' : (t < 0.42 ? '?' : ',');
      p.final_contour = p.terminator == ',' ? Contour::non_sentence_final : Contour::sentence_final;
      if (i > 0 && draw.chance(0.45)) {
        p.initial_pause = Pause{draw.pick(grid), 2, false};
      } else if (draw.chance(0.12)) {
        p.initial_short_break = true;
      }
      std::string text;
      if (draw.chance(0.3)) {
        text = draw.pick(cues);
        if (draw.chance(0.2)) text += " " + draw.pick(cues);
      }
      const std::size_t words = 2 + draw.below(5);
      for (std::size_t w = 0; w < words; ++w) text += (text.empty() ? "" : " ") + draw.pick(detail::filler_words());
      p.text = text;
    }

    if (config.labeling == Labeling::planted_rule && n >= 4) {
      // Every narrative carries sites on both sides of the rule's cut point,
      // so any training subset fixes the same observed threshold.
      std::size_t a = 1 + draw.below(n - 2), b = 1 + draw.below(n - 2);
      if (a == b) b = a % (n - 1) + 1;
      phrases[a - 1].terminator = '.';
      phrases[a - 1].final_contour = Contour::sentence_final;
      phrases[a].initial_pause = Pause{config.rule_duration, 2, false};
      phrases[a].initial_short_break = false;
      phrases[b - 1].terminator = '.';
      phrases[b - 1].final_contour = Contour::sentence_final;
      phrases[b].initial_pause = Pause{std::round(config.rule_duration * 100 + 5) / 100.0, 2, false};
      phrases[b].initial_short_break = false;
    }

    std::vector<ClauseAnnotation> clauses;
    for (std::size_t i = 1; i <= n; ++i) {
      std::size_t starts = (i == 1 || draw.chance(config.clause_rate)) ? 1 : 0;
      if (starts && i > 1 && draw.chance(0.04)) starts = 2;
      for (std::size_t s = 0; s < starts; ++s) {
        ClauseAnnotation c;
        c.index = clauses.size() + 1;
        c.start_phrase = i;
        if (c.index > 1) {
          c.coref = draw.chance(0.45);
          c.infer = draw.chance(0.2);
          const std::size_t pronouns = draw.below(3);
          for (std::size_t q = 0; q < pronouns; ++q) {
            Pronoun p{draw.chance(0.5) ? "he" : "it", std::nullopt};
            if (!draw.chance(0.15)) {
              std::size_t back = 1 + draw.below(std::min<std::size_t>(c.index - 1, 8));
              p.antecedent = c.index - back;
            }
            c.pronouns.push_back(std::move(p));
          }
        }
        clauses.push_back(std::move(c));
      }
    }

    SubjectAnnotation subjects;
    subjects.subject_count = config.subjects;
    subjects.marks_per_site.assign(n - 1, 0);
    // Provisional counts so the narrative can be coded; replaced below.
    Narrative draft(id, phrases, clauses, subjects);
    CoderConfig coder;
    coder.threshold = 1;
    auto records = code_narrative(draft, coder);

    std::vector<std::vector<std::size_t>> marks(static_cast<std::size_t>(config.subjects));
    for (const auto& r : records) {
      const auto& v = r.features;
      std::vector<std::size_t> order(static_cast<std::size_t>(config.subjects));
      for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
      for (std::size_t s = order.size(); s > 1; --s) std::swap(order[s - 1], order[draw.below(s)]);

      std::size_t count = 0;
      if (config.labeling == Labeling::planted_rule) {
        bool boundary = v.before == Contour::sentence_final && v.pause && v.duration > config.rule_duration;
        const auto T = static_cast<std::size_t>(config.threshold);
        const auto S = static_cast<std::size_t>(config.subjects);
        count = boundary ? T + draw.below(S - T + 1) : draw.below(T);
        for (std::size_t s = 0; s < count; ++s) marks[order[s]].push_back(r.site_index);
      } else {
        double odds = 0.03;
        if (v.before == Contour::sentence_final) odds += 0.12;
        if (v.pause) odds += std::min(0.35, 0.3 * v.duration);
        if (v.coref == NpValue::minus && v.infer == NpValue::minus) odds += 0.2;
        if (v.cue_prosody == CueProsody::complex) odds += 0.2;
        const double strength = draw.unit();  // how salient this site is to everyone
        const double p = std::min(0.95, odds * (0.4 + 1.2 * strength));
        for (std::size_t s = 0; s < order.size(); ++s)
          if (draw.chance(p)) marks[s].push_back(r.site_index);
      }
    }
    subjects.marks_per_site.assign(n - 1, 0);
    for (auto& m : marks) {
      std::sort(m.begin(), m.end());
      for (auto site : m) ++subjects.marks_per_site[site - 1];
    }
    subjects.subject_sites = std::move(marks);
    corpus.emplace_back(id, std::move(phrases), std::move(clauses), std::move(subjects));
  }
  return corpus;
}

}  // namespace narseg

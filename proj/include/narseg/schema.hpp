#pragma once

// The twelve boundary-site features, their value spellings, and site records.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "narseg/corpus.hpp"
#include "narseg/error.hpp"

namespace narseg {

enum class Feature { before, after, pause, duration, cue1, word1, cue2, word2, coref, infer, global_pro, cue_prosody };

inline constexpr std::array<Feature, 12> kFeatures = {
    Feature::before, Feature::after, Feature::pause,  Feature::duration, Feature::cue1,       Feature::word1,
    Feature::cue2,   Feature::word2, Feature::coref,  Feature::infer,    Feature::global_pro, Feature::cue_prosody};

inline std::string_view feature_name(Feature f) {
  switch (f) {
    case Feature::before: return "before";
    case Feature::after: return "after";
    case Feature::pause: return "pause";
    case Feature::duration: return "duration";
    case Feature::cue1: return "cue1";
    case Feature::word1: return "word1";
    case Feature::cue2: return "cue2";
    case Feature::word2: return "word2";
    case Feature::coref: return "coref";
    case Feature::infer: return "infer";
    case Feature::global_pro: return "global.pro";
    case Feature::cue_prosody: return "cue-prosody";
  }
  return "?";
}

inline std::optional<Feature> parse_feature(std::string_view name) {
  for (auto f : kFeatures)
    if (feature_name(f) == name) return f;
  if (name == "global_pro") return Feature::global_pro;
  if (name == "cue_prosody") return Feature::cue_prosody;
  return std::nullopt;
}

inline bool is_continuous(Feature f) { return f == Feature::duration; }

inline std::size_t feature_position(Feature f) { return static_cast<std::size_t>(f); }

enum class NpValue { plus, minus, na };

enum class CueProsody { complex, yes, no };

enum class Label { non_boundary, boundary };

inline std::string_view label_name(Label l) { return l == Label::boundary ? "boundary" : "non_boundary"; }

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "boundary") return Label::boundary;
  if (s == "non_boundary" || s == "non-boundary") return Label::non_boundary;
  return std::nullopt;
}

struct FeatureVector {
  Contour before = Contour::non_sentence_final;
  Contour after = Contour::non_sentence_final;
  bool pause = false;
  double duration = 0.0;
  bool cue1 = false;
  std::optional<std::string> word1;
  bool cue2 = false;
  std::optional<std::string> word2;
  NpValue coref = NpValue::na;
  NpValue infer = NpValue::na;
  NpValue global_pro = NpValue::na;
  CueProsody cue_prosody = CueProsody::no;

  bool operator==(const FeatureVector&) const = default;
};

struct SiteRecord {
  std::string narrative_id;
  std::size_t site_index = 0;
  FeatureVector features;
  Label label = Label::non_boundary;

  bool operator==(const SiteRecord&) const = default;
};

inline constexpr std::string_view kNA = "NA";

namespace detail {

inline std::string np_spelling(NpValue v, std::string_view plus, std::string_view minus) {
  switch (v) {
    case NpValue::plus: return std::string(plus);
    case NpValue::minus: return std::string(minus);
    case NpValue::na: break;
  }
  return std::string(kNA);
}

}  // namespace detail

inline std::string contour_value(Contour c) { return c == Contour::sentence_final ? "+sfc" : "-sfc"; }
inline std::string bool_value(bool b) { return b ? "true" : "false"; }

inline std::string cue_prosody_value(CueProsody c) {
  switch (c) {
    case CueProsody::complex: return "complex";
    case CueProsody::yes: return "true";
    case CueProsody::no: break;
  }
  return "false";
}

// Categorical spelling of a feature; duration is rendered numerically.
inline std::string categorical_value(const FeatureVector& v, Feature f) {
  switch (f) {
    case Feature::before: return contour_value(v.before);
    case Feature::after: return contour_value(v.after);
    case Feature::pause: return bool_value(v.pause);
    case Feature::duration: return text::shortest(v.duration);
    case Feature::cue1: return bool_value(v.cue1);
    case Feature::word1: return v.word1 ? *v.word1 : std::string(kNA);
    case Feature::cue2: return bool_value(v.cue2);
    case Feature::word2: return v.word2 ? *v.word2 : std::string(kNA);
    case Feature::coref: return detail::np_spelling(v.coref, "+coref", "-coref");
    case Feature::infer: return detail::np_spelling(v.infer, "+infer", "-infer");
    case Feature::global_pro: return detail::np_spelling(v.global_pro, "+gp", "-gp");
    case Feature::cue_prosody: return cue_prosody_value(v.cue_prosody);
  }
  return {};
}

inline double numeric_value(const FeatureVector& v, Feature f) {
  if (f != Feature::duration) throw SchemaError(std::string(feature_name(f)) + " is not continuous");
  return v.duration;
}

// Fixed value domains; word1/word2 depend on the lexicon and are not listed here.
inline std::vector<std::string> fixed_domain(Feature f) {
  switch (f) {
    case Feature::before:
    case Feature::after: return {"+sfc", "-sfc"};
    case Feature::pause:
    case Feature::cue1:
    case Feature::cue2: return {"true", "false"};
    case Feature::coref: return {"+coref", "-coref", "NA"};
    case Feature::infer: return {"+infer", "-infer", "NA"};
    case Feature::global_pro: return {"+gp", "-gp", "NA"};
    case Feature::cue_prosody: return {"complex", "true", "false"};
    default: return {};
  }
}

// Accepts the canonical spelling plus the long forms used in printed trees
// ("+sentence.final.contour", "+s.f.c", "+global.pro", ...).
inline std::optional<std::string> canonical_value(Feature f, std::string_view raw) {
  std::string s(raw);
  switch (f) {
    case Feature::before:
    case Feature::after:
      if (s == "+sentence.final.contour" || s == "+s.f.c") return "+sfc";
      if (s == "-sentence.final.contour" || s == "-s.f.c") return "-sfc";
      break;
    case Feature::global_pro:
      if (s == "+global.pro") return "+gp";
      if (s == "-global.pro") return "-gp";
      break;
    case Feature::word1:
    case Feature::word2:
      if (s.empty()) return std::nullopt;
      return s;
    case Feature::duration: return std::nullopt;
    default: break;
  }
  for (const auto& v : fixed_domain(f))
    if (v == s) return s;
  return std::nullopt;
}

// Sets one categorical feature from its canonical spelling.
inline void set_categorical(FeatureVector& v, Feature f, std::string_view value) {
  auto bad = [&] {
    return SchemaError("value '" + std::string(value) + "' is not in the domain of " + std::string(feature_name(f)));
  };
  auto np = [&](std::string_view plus, std::string_view minus) {
    if (value == plus) return NpValue::plus;
    if (value == minus) return NpValue::minus;
    if (value == kNA) return NpValue::na;
    throw bad();
  };
  auto boolean = [&] {
    if (value == "true") return true;
    if (value == "false") return false;
    throw bad();
  };
  auto contour = [&] {
    if (value == "+sfc") return Contour::sentence_final;
    if (value == "-sfc") return Contour::non_sentence_final;
    throw bad();
  };
  auto word = [&]() -> std::optional<std::string> {
    if (value == kNA) return std::nullopt;
    if (value.empty()) throw bad();
    return std::string(value);
  };
  switch (f) {
    case Feature::before: v.before = contour(); break;
    case Feature::after: v.after = contour(); break;
    case Feature::pause: v.pause = boolean(); break;
    case Feature::cue1: v.cue1 = boolean(); break;
    case Feature::word1: v.word1 = word(); break;
    case Feature::cue2: v.cue2 = boolean(); break;
    case Feature::word2: v.word2 = word(); break;
    case Feature::coref: v.coref = np("+coref", "-coref"); break;
    case Feature::infer: v.infer = np("+infer", "-infer"); break;
    case Feature::global_pro: v.global_pro = np("+gp", "-gp"); break;
    case Feature::cue_prosody:
      if (value == "complex") v.cue_prosody = CueProsody::complex;
      else if (value == "true") v.cue_prosody = CueProsody::yes;
      else if (value == "false") v.cue_prosody = CueProsody::no;
      else throw bad();
      break;
    case Feature::duration: {
      auto d = text::parse_double(value);
      if (!d || *d < 0) throw bad();
      v.duration = *d;
      break;
    }
  }
}

// complex iff +sfc, a pause, and either a non-"and" first cue word or "and"
// followed by a non-"and" second cue word; otherwise the pause value.
inline CueProsody code_cue_prosody(Contour before, bool pause, bool cue1, const std::optional<std::string>& word1,
                                   bool cue2, const std::optional<std::string>& word2) {
  bool lead = cue1 && word1 && *word1 != "and";
  bool and_then = cue1 && word1 && *word1 == "and" && cue2 && word2 && *word2 != "and";
  if (before == Contour::sentence_final && pause && (lead || and_then)) return CueProsody::complex;
  return pause ? CueProsody::yes : CueProsody::no;
}

// First violated FeatureVector invariant, if any.
inline std::optional<std::string> invariant_violation(const FeatureVector& v) {
  if (!std::isfinite(v.duration) || v.duration < 0) return "duration must be finite and >= 0";
  if (v.duration > 0 && !v.pause) return "duration > 0 requires pause";
  if (!v.pause && v.duration != 0) return "pause = false requires duration 0";
  if (v.word1.has_value() != v.cue1) return "word1 must be NA exactly when cue1 is false";
  if (v.word2.has_value() != v.cue2) return "word2 must be NA exactly when cue2 is false";
  if (v.cue2 && !v.cue1) return "cue2 requires cue1";
  bool c = v.coref == NpValue::na, i = v.infer == NpValue::na, g = v.global_pro == NpValue::na;
  if (!(c == i && i == g)) return "coref, infer and global.pro must be NA together";
  if (v.cue_prosody != code_cue_prosody(v.before, v.pause, v.cue1, v.word1, v.cue2, v.word2))
    return "cue-prosody disagrees with before/pause/cue values";
  return std::nullopt;
}

}  // namespace narseg

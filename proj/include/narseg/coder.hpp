#pragma once

// Per-site feature coding: prosody, cue words, NP features and gold labels.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "narseg/corpus.hpp"
#include "narseg/error.hpp"
#include "narseg/schema.hpp"
#include "narseg/text.hpp"

namespace narseg {

class CueLexicon {
public:
  CueLexicon() = default;
  explicit CueLexicon(std::set<std::string> words) : words_(std::move(words)) {
    if (words_.empty()) throw ConfigError("cue lexicon is empty");
  }

  static CueLexicon defaults() {
    return CueLexicon({"also", "and",  "anyway", "basically", "because", "boy",   "but",  "finally",
                       "first", "like", "meanwhile", "no",      "now",     "oh",    "okay", "only",
                       "or",    "right", "see",    "so",        "still",   "then",  "well", "where"});
  }

  // One word per line; '#' comments and blank lines ignored; words are lowercased.
  static CueLexicon load(std::istream& in) {
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      for (auto& w : text::split_ws(line)) words.insert(text::lower(w));
    }
    return CueLexicon(std::move(words));
  }

  static CueLexicon load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open cue lexicon " + path.string());
    return load(in);
  }

  bool contains(const std::string& w) const { return words_.count(w) > 0; }
  const std::set<std::string>& words() const { return words_; }

private:
  std::set<std::string> words_;
};

// Lowercased lexical items of a phrase. Pause brackets and ".." breaks are
// dropped, surrounding punctuation stripped, and intra-word hyphens removed
// so lengthened spellings like "A-nd" compare as "and".
inline std::vector<std::string> lexical_items(std::string_view phrase_text) {
  std::vector<std::string> items;
  for (const auto& raw : text::split_ws(phrase_text)) {
    if (raw.front() == '[') continue;
    std::string tok;
    for (char c : raw)
      if (c != '-') tok.push_back(c);
    // Edge apostrophes are quotation marks; inner ones belong to contractions.
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    std::size_t b = 0, e = tok.size();
    while (b < e && !alnum(tok[b])) ++b;
    while (e > b && !alnum(tok[e - 1])) --e;
    if (b == e) continue;
    // "word[.5]" glued to a bracket
    std::string core = tok.substr(b, e - b);
    if (auto cut = core.find_first_of("[]"); cut != std::string::npos) core.erase(cut);
    if (!core.empty()) items.push_back(text::lower(core));
  }
  return items;
}

struct ProsodyFeatures {
  Contour before = Contour::non_sentence_final;
  Contour after = Contour::non_sentence_final;
  bool pause = false;
  double duration = 0.0;
};

inline ProsodyFeatures code_prosody(const ProsodicPhrase& left, const ProsodicPhrase& right) {
  ProsodyFeatures p;
  p.before = left.final_contour;
  p.after = right.final_contour;
  p.pause = right.initial_pause.has_value();
  p.duration = p.pause ? right.initial_pause->seconds : 0.0;
  return p;
}

struct CueFeatures {
  bool cue1 = false;
  std::optional<std::string> word1;
  bool cue2 = false;
  std::optional<std::string> word2;
};

inline CueFeatures code_cues(const ProsodicPhrase& right, const CueLexicon& lexicon) {
  CueFeatures c;
  auto items = lexical_items(right.text);
  if (items.empty() || !lexicon.contains(items[0])) return c;
  c.cue1 = true;
  c.word1 = items[0];
  if (items.size() > 1 && lexicon.contains(items[1])) {
    c.cue2 = true;
    c.word2 = items[1];
  }
  return c;
}

struct NpFeatures {
  NpValue coref = NpValue::na;
  NpValue infer = NpValue::na;
  NpValue global_pro = NpValue::na;
};

// The first clause beginning in phrase `phrase`, if any.
inline const ClauseAnnotation* clause_starting_in(std::span<const ClauseAnnotation> clauses, std::size_t phrase) {
  for (const auto& c : clauses) {
    if (c.start_phrase == phrase) return &c;
    if (c.start_phrase > phrase) break;
  }
  return nullptr;
}

// NP features for the site between phrases `site` and `site`+1. The current
// segment opens at the phrase after `last_boundary` (phrase 1 when none), and
// global.pro is + when a pronoun's antecedent clause starts inside it.
inline NpFeatures code_np(std::size_t site, std::span<const ClauseAnnotation> clauses,
                          std::optional<std::size_t> last_boundary) {
  NpFeatures np;
  const ClauseAnnotation* c = clause_starting_in(clauses, site + 1);
  if (!c) return np;
  np.coref = c->coref ? NpValue::plus : NpValue::minus;
  np.infer = c->infer ? NpValue::plus : NpValue::minus;
  const std::size_t segment_start = last_boundary ? *last_boundary + 1 : 1;
  np.global_pro = NpValue::minus;
  for (const auto& p : c->pronouns) {
    if (!p.antecedent || *p.antecedent < 1 || *p.antecedent > clauses.size()) continue;
    if (clauses[*p.antecedent - 1].start_phrase >= segment_start) {
      np.global_pro = NpValue::plus;
      break;
    }
  }
  return np;
}

inline bool np_conjunction(const NpFeatures& np) {
  return np.coref == NpValue::minus && np.infer == NpValue::minus && np.global_pro == NpValue::minus;
}

inline constexpr int kDefaultThreshold = 3;

inline std::vector<Label> label_sites(const SubjectAnnotation& subjects, int threshold = kDefaultThreshold) {
  if (threshold < 1 || threshold > subjects.subject_count)
    throw ConfigError("boundary threshold " + std::to_string(threshold) + " outside [1, " +
                      std::to_string(subjects.subject_count) + "]");
  std::vector<Label> labels;
  labels.reserve(subjects.marks_per_site.size());
  for (int m : subjects.marks_per_site) labels.push_back(m >= threshold ? Label::boundary : Label::non_boundary);
  return labels;
}

enum class GlobalProMode { static_mode, dynamic_mode };

inline std::string_view global_pro_mode_name(GlobalProMode m) {
  return m == GlobalProMode::static_mode ? "static" : "dynamic";
}

inline std::optional<GlobalProMode> parse_global_pro_mode(std::string_view s) {
  if (s == "static") return GlobalProMode::static_mode;
  if (s == "dynamic") return GlobalProMode::dynamic_mode;
  return std::nullopt;
}

struct CoderConfig {
  CueLexicon lexicon = CueLexicon::defaults();
  int threshold = kDefaultThreshold;
  GlobalProMode global_pro_mode = GlobalProMode::static_mode;
};

inline FeatureVector assemble(const ProsodyFeatures& p, const CueFeatures& c, const NpFeatures& np) {
  FeatureVector v;
  v.before = p.before;
  v.after = p.after;
  v.pause = p.pause;
  v.duration = p.duration;
  v.cue1 = c.cue1;
  v.word1 = c.word1;
  v.cue2 = c.cue2;
  v.word2 = c.word2;
  v.coref = np.coref;
  v.infer = np.infer;
  v.global_pro = np.global_pro;
  v.cue_prosody = code_cue_prosody(p.before, p.pause, c.cue1, c.word1, c.cue2, c.word2);
  return v;
}

// One record per site. global.pro is grounded on the boundaries the NP
// conjunction assigns left to right; in dynamic mode the table carries the
// same values and sequential consumers recompute it from their own decisions.
inline std::vector<SiteRecord> code_narrative(const Narrative& n, const CoderConfig& config = {}) {
  auto labels = label_sites(n.subjects(), config.threshold);
  std::vector<SiteRecord> records;
  records.reserve(n.site_count());
  std::optional<std::size_t> last_boundary;
  for (std::size_t site = 1; site <= n.site_count(); ++site) {
    auto prosody = code_prosody(n.phrase(site), n.phrase(site + 1));
    auto cues = code_cues(n.phrase(site + 1), config.lexicon);
    auto np = code_np(site, n.clauses(), last_boundary);
    if (np_conjunction(np)) last_boundary = site;
    records.push_back({n.id(), site, assemble(prosody, cues, np), labels[site - 1]});
  }
  return records;
}

// Feature table: comma-separated, '#' metadata lines, one header row.
inline const std::vector<std::string>& feature_table_columns() {
  static const std::vector<std::string> cols = {"narrative_id", "site_index", "before",     "after",
                                                "pause",        "duration",   "cue1",       "word1",
                                                "cue2",         "word2",      "coref",      "infer",
                                                "global.pro",   "cue-prosody", "label"};
  return cols;
}

struct TableMeta {
  GlobalProMode global_pro_mode = GlobalProMode::static_mode;
  int threshold = kDefaultThreshold;
};

inline void write_feature_table(std::ostream& out, std::span<const SiteRecord> records, const TableMeta& meta = {}) {
  out << "# global_pro_mode=" << global_pro_mode_name(meta.global_pro_mode)
      << (meta.global_pro_mode == GlobalProMode::dynamic_mode ? " (values shown are the static Condition-1 grounding)"
                                                              : " (grounded on Condition-1 boundaries)")
      << "\n# threshold=" << meta.threshold << "\n";
  const auto& cols = feature_table_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : records) {
    out << r.narrative_id << "," << r.site_index;
    for (auto f : kFeatures) {
      out << ",";
      if (f == Feature::duration)
        out << text::fixed_at_least(r.features.duration, 2);
      else
        out << categorical_value(r.features, f);
    }
    out << "," << label_name(r.label) << "\n";
  }
}

struct FeatureTable {
  std::vector<SiteRecord> records;
  TableMeta meta;
};

inline FeatureTable read_feature_table(std::istream& in) {
  FeatureTable table;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  const auto& cols = feature_table_columns();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    if (line.front() == '#') {
      auto body = text::trim(std::string_view(line).substr(1));
      if (body.rfind("global_pro_mode=", 0) == 0) {
        auto v = text::split_ws(body.substr(16));
        if (!v.empty())
          if (auto m = parse_global_pro_mode(v[0])) table.meta.global_pro_mode = *m;
      } else if (body.rfind("threshold=", 0) == 0) {
        if (auto t = text::parse_int(text::trim(body.substr(10)))) table.meta.threshold = static_cast<int>(*t);
      }
      continue;
    }
    auto fields = text::split(line, ',');
    if (!header) {
      if (fields != cols) throw ParseError("feature table header does not match the expected columns", lineno);
      header = true;
      continue;
    }
    if (fields.size() != cols.size())
      throw ParseError("expected " + std::to_string(cols.size()) + " fields, got " + std::to_string(fields.size()),
                       lineno);
    SiteRecord r;
    r.narrative_id = fields[0];
    auto site = text::parse_int(fields[1]);
    if (!site || *site < 1) throw ParseError("bad site index '" + fields[1] + "'", lineno);
    r.site_index = static_cast<std::size_t>(*site);
    try {
      for (std::size_t k = 0; k < kFeatures.size(); ++k) set_categorical(r.features, kFeatures[k], fields[k + 2]);
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), lineno);
    }
    auto label = parse_label(fields.back());
    if (!label) throw ParseError("bad label '" + fields.back() + "'", lineno);
    r.label = *label;
    table.records.push_back(std::move(r));
  }
  if (!header) throw ParseError("feature table has no header row");
  return table;
}

}  // namespace narseg

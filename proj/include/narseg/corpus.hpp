#pragma once

// Chafe-convention transcripts and their annotation sidecars.
//
// Transcript: one prosodic phrase per non-empty line.
//   [X]   leading bracketed pause of X seconds ("[.55?" style uncertainty
//         marks are accepted and the number kept)
//   ..    leading break too short to be measured
//   . ?   sentence-final contour at end of line
//   ,     phrase-final, non-sentence-final contour at end of line
//
// Sidecar (one keyword per line, '#' starts a comment):
//   NARRATIVE <id> <n_phrases>
//   SUBJECTS <count>
//   <marks for site 1> <marks for site 2> ...     (n_phrases-1 integers)
//   MARKS <subject> <site> <site> ...             (optional, per subject)
//   CLAUSE <j> <start_phrase> <+|-> <+|->         (coref, infer)
//   PRONOUN <token> <antecedent_clause|NONE>      (belongs to last CLAUSE)

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "narseg/error.hpp"
#include "narseg/text.hpp"

namespace narseg {

enum class Contour { sentence_final, non_sentence_final };

enum class ParseMode { strict, lenient };

struct Pause {
  double seconds = 0.0;
  int decimals = 1;  // digits after the point in the source, reused when emitting
  bool uncertain = false;

  bool operator==(const Pause&) const = default;
};

struct ProsodicPhrase {
  std::size_t index = 0;
  std::string text;
  std::optional<Pause> initial_pause;
  bool initial_short_break = false;
  Contour final_contour = Contour::non_sentence_final;
  char terminator = ',';

  bool operator==(const ProsodicPhrase&) const = default;
};

struct Pronoun {
  std::string token;
  std::optional<std::size_t> antecedent;  // clause index

  bool operator==(const Pronoun&) const = default;
};

struct ClauseAnnotation {
  std::size_t index = 0;
  std::size_t start_phrase = 0;
  bool coref = false;
  bool infer = false;
  std::vector<Pronoun> pronouns;

  bool operator==(const ClauseAnnotation&) const = default;
};

struct SubjectAnnotation {
  int subject_count = 7;
  std::vector<int> marks_per_site;
  // Optional per-subject boundary sites (1-based site indices), one entry per subject.
  std::optional<std::vector<std::vector<std::size_t>>> subject_sites;

  bool operator==(const SubjectAnnotation&) const = default;
};

struct Annotations {
  std::string narrative_id;
  std::size_t n_phrases = 0;
  std::vector<ClauseAnnotation> clauses;
  SubjectAnnotation subjects;
};

struct ParseWarning {
  std::size_t line = 0;
  std::string message;
};

class Narrative {
public:
  Narrative(std::string id, std::vector<ProsodicPhrase> phrases,
            std::vector<ClauseAnnotation> clauses, SubjectAnnotation subjects)
      : id_(std::move(id)),
        phrases_(std::move(phrases)),
        clauses_(std::move(clauses)),
        subjects_(std::move(subjects)) {
    if (phrases_.size() < 2)
      throw SchemaError("narrative '" + id_ + "' needs at least 2 phrases, has " +
                        std::to_string(phrases_.size()));
    for (std::size_t i = 0; i < phrases_.size(); ++i) phrases_[i].index = i + 1;
    if (subjects_.marks_per_site.size() != site_count())
      throw SchemaError("narrative '" + id_ + "': " + std::to_string(subjects_.marks_per_site.size()) +
                        " subject counts for " + std::to_string(site_count()) + " sites");
    std::size_t prev = 1;
    for (std::size_t j = 0; j < clauses_.size(); ++j) {
      const auto& c = clauses_[j];
      if (c.index != j + 1)
        throw SchemaError("narrative '" + id_ + "': clause " + std::to_string(c.index) + " out of sequence");
      if (c.start_phrase < 1 || c.start_phrase > phrases_.size())
        throw SchemaError("narrative '" + id_ + "': clause " + std::to_string(c.index) +
                          " starts outside the phrase range");
      if (c.start_phrase < prev)
        throw SchemaError("narrative '" + id_ + "': clause start phrases must be non-decreasing");
      prev = c.start_phrase;
      for (const auto& p : c.pronouns)
        if (p.antecedent && (*p.antecedent < 1 || *p.antecedent >= c.index))
          throw SchemaError("narrative '" + id_ + "': clause " + std::to_string(c.index) +
                            " pronoun antecedent must precede it");
    }
  }

  const std::string& id() const { return id_; }
  const std::vector<ProsodicPhrase>& phrases() const { return phrases_; }
  const std::vector<ClauseAnnotation>& clauses() const { return clauses_; }
  const SubjectAnnotation& subjects() const { return subjects_; }

  std::size_t phrase_count() const { return phrases_.size(); }
  std::size_t site_count() const { return phrases_.size() - 1; }

  // 1-based phrase access.
  const ProsodicPhrase& phrase(std::size_t i) const { return phrases_.at(i - 1); }

private:
  std::string id_;
  std::vector<ProsodicPhrase> phrases_;
  std::vector<ClauseAnnotation> clauses_;
  SubjectAnnotation subjects_;
};

namespace detail {

struct LineResult {
  std::optional<ProsodicPhrase> phrase;
  std::optional<std::string> problem;
};

// Consumes a leading "[X]" (or the nested "[X ... ]" form). Returns the pause
// and strips it from `rest`; nullopt with `malformed` set when the bracket
// cannot be read.
inline std::optional<Pause> take_leading_pause(std::string& rest, bool& malformed) {
  malformed = false;
  if (rest.empty() || rest.front() != '[') return std::nullopt;
  std::size_t i = 1;
  while (i < rest.size() && ((rest[i] >= '0' && rest[i] <= '9') || rest[i] == '.')) ++i;
  std::string number = rest.substr(1, i - 1);
  bool uncertain = false;
  if (i < rest.size() && rest[i] == '?') {
    uncertain = true;
    ++i;
  }
  auto value = text::parse_decimal(number);
  if (!value || i >= rest.size()) {
    malformed = true;
    return std::nullopt;
  }
  Pause p{value->value, value->decimals, uncertain};
  if (rest[i] == ']') {
    rest = rest.substr(i + 1);
    return p;
  }
  if (!text::is_space(rest[i])) {
    malformed = true;
    return std::nullopt;
  }
  // Nested form: "[1.1 [.7] A-nd] he's ..." -- drop the matching close bracket.
  int depth = 0;
  for (std::size_t j = i; j < rest.size(); ++j) {
    if (rest[j] == '[') {
      ++depth;
    } else if (rest[j] == ']') {
      if (depth == 0) {
        rest = rest.substr(i, j - i) + rest.substr(j + 1);
        return p;
      }
      --depth;
    }
  }
  malformed = true;
  return std::nullopt;
}

inline LineResult parse_line(std::string_view raw, ParseMode mode, std::vector<std::string>& notes) {
  LineResult out;
  ProsodicPhrase ph;
  std::string rest(text::trim(raw));

  bool malformed = false;
  ph.initial_pause = take_leading_pause(rest, malformed);
  if (malformed) {
    if (mode == ParseMode::strict) {
      out.problem = "malformed pause bracket";
      return out;
    }
    notes.emplace_back("malformed pause bracket kept as text");
  }
  rest = std::string(text::trim(rest));

  if (rest.size() >= 2 && rest[0] == '.' && rest[1] == '.') {
    ph.initial_short_break = true;
    std::size_t k = 0;
    while (k < rest.size() && rest[k] == '.') ++k;
    if (k == rest.size() && k > 2) --k;  // "..." : break, then the terminator
    rest = std::string(text::trim(std::string_view(rest).substr(k)));
  }

  char last = rest.empty() ? '\0' : rest.back();
  if (last == '.' || last == '?' || last == ',') {
    ph.terminator = last;
    ph.final_contour = last == ',' ? Contour::non_sentence_final : Contour::sentence_final;
    rest.pop_back();
  } else {
    if (mode == ParseMode::strict) {
      out.problem = "line does not end in '.', '?' or ','";
      return out;
    }
    notes.emplace_back("missing terminator, assuming non-sentence-final contour");
    ph.terminator = ',';
    ph.final_contour = Contour::non_sentence_final;
  }
  ph.text = std::string(text::trim(rest));
  out.phrase = std::move(ph);
  return out;
}

}  // namespace detail

inline std::vector<ProsodicPhrase> parse_transcript(std::istream& in, ParseMode mode = ParseMode::strict,
                                                    std::vector<ParseWarning>* warnings = nullptr) {
  std::vector<ProsodicPhrase> phrases;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    std::vector<std::string> notes;
    auto r = detail::parse_line(line, mode, notes);
    if (r.problem) throw ParseError(*r.problem, lineno);
    if (warnings)
      for (auto& n : notes) warnings->push_back({lineno, std::move(n)});
    r.phrase->index = phrases.size() + 1;
    phrases.push_back(std::move(*r.phrase));
  }
  return phrases;
}

inline std::vector<ProsodicPhrase> parse_transcript(std::string_view source, ParseMode mode = ParseMode::strict,
                                                    std::vector<ParseWarning>* warnings = nullptr) {
  std::istringstream in{std::string(source)};
  return parse_transcript(in, mode, warnings);
}

inline std::string format_pause(const Pause& p) {
  return "[" + text::fixed(p.seconds, p.decimals) + (p.uncertain ? "?" : "") + "]";
}

inline std::string emit_phrase(const ProsodicPhrase& p) {
  std::string line;
  if (p.initial_pause) line += format_pause(*p.initial_pause) + " ";
  if (p.initial_short_break) line += "..";
  line += p.text;
  line.push_back(p.terminator);
  return line;
}

inline std::string emit_transcript(const std::vector<ProsodicPhrase>& phrases) {
  std::string out;
  for (const auto& p : phrases) out += emit_phrase(p) + "\n";
  return out;
}

inline std::string emit_transcript(const Narrative& n) { return emit_transcript(n.phrases()); }

inline Annotations parse_annotations(std::istream& in, std::size_t n_phrases) {
  Annotations ann;
  bool have_header = false;
  bool in_counts = false;
  bool have_subjects = false;
  bool have_counts = false;
  std::vector<std::pair<int, std::vector<std::size_t>>> marks;
  std::string line;
  std::size_t lineno = 0;
  const std::size_t sites = n_phrases > 0 ? n_phrases - 1 : 0;

  auto fail = [&](const std::string& msg) -> void { throw ParseError(msg, lineno); };

  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto tok = text::split_ws(line);
    if (tok.empty()) continue;
    const std::string& kw = tok[0];

    if (!have_header && kw != "NARRATIVE") fail("annotation file must start with NARRATIVE");

    if (kw == "NARRATIVE") {
      if (have_header) fail("duplicate NARRATIVE record");
      if (tok.size() != 3) fail("expected: NARRATIVE <id> <n_phrases>");
      auto n = text::parse_int(tok[2]);
      if (!n || *n < 0) fail("bad phrase count '" + tok[2] + "'");
      if (static_cast<std::size_t>(*n) != n_phrases)
        fail("annotations coded against " + tok[2] + " phrases, transcript has " + std::to_string(n_phrases));
      ann.narrative_id = tok[1];
      ann.n_phrases = n_phrases;
      have_header = true;
      in_counts = false;
    } else if (kw == "SUBJECTS") {
      if (have_subjects) fail("duplicate SUBJECTS record");
      if (tok.size() < 2) fail("expected: SUBJECTS <count>");
      auto c = text::parse_int(tok[1]);
      if (!c || *c < 1) fail("bad subject count '" + tok[1] + "'");
      ann.subjects.subject_count = static_cast<int>(*c);
      have_subjects = true;
      in_counts = true;
      for (std::size_t k = 2; k < tok.size(); ++k) {
        auto v = text::parse_int(tok[k]);
        if (!v || *v < 0) fail("bad subject mark count '" + tok[k] + "'");
        ann.subjects.marks_per_site.push_back(static_cast<int>(*v));
        have_counts = true;
      }
    } else if (kw == "MARKS") {
      in_counts = false;
      if (!have_subjects) fail("MARKS before SUBJECTS");
      if (tok.size() < 2) fail("expected: MARKS <subject> <site>...");
      auto s = text::parse_int(tok[1]);
      if (!s || *s < 1 || *s > ann.subjects.subject_count) fail("subject index out of range");
      for (auto& m : marks)
        if (m.first == *s) fail("duplicate MARKS for subject " + tok[1]);
      std::vector<std::size_t> chosen;
      for (std::size_t k = 2; k < tok.size(); ++k) {
        auto v = text::parse_int(tok[k]);
        if (!v || *v < 1 || static_cast<std::size_t>(*v) > sites) fail("site index '" + tok[k] + "' out of range");
        chosen.push_back(static_cast<std::size_t>(*v));
      }
      std::sort(chosen.begin(), chosen.end());
      if (std::adjacent_find(chosen.begin(), chosen.end()) != chosen.end()) fail("repeated site in MARKS");
      marks.emplace_back(static_cast<int>(*s), std::move(chosen));
    } else if (kw == "CLAUSE") {
      in_counts = false;
      if (tok.size() != 5) fail("expected: CLAUSE <j> <start_phrase> <+|-> <+|->");
      auto j = text::parse_int(tok[1]);
      auto start = text::parse_int(tok[2]);
      if (!j || *j != static_cast<long>(ann.clauses.size() + 1))
        fail("clause index must be " + std::to_string(ann.clauses.size() + 1));
      if (!start || *start < 1 || static_cast<std::size_t>(*start) > n_phrases)
        fail("clause start phrase out of range");
      if (!ann.clauses.empty() && static_cast<std::size_t>(*start) < ann.clauses.back().start_phrase)
        fail("clause start phrases must be non-decreasing");
      auto polarity = [&](const std::string& t) {
        if (t == "+") return true;
        if (t != "-") fail("expected '+' or '-', got '" + t + "'");
        return false;
      };
      ClauseAnnotation c;
      c.index = static_cast<std::size_t>(*j);
      c.start_phrase = static_cast<std::size_t>(*start);
      c.coref = polarity(tok[3]);
      c.infer = polarity(tok[4]);
      ann.clauses.push_back(std::move(c));
    } else if (kw == "PRONOUN") {
      in_counts = false;
      if (ann.clauses.empty()) fail("PRONOUN before any CLAUSE");
      if (tok.size() != 3) fail("expected: PRONOUN <token> <antecedent_clause|NONE>");
      auto& c = ann.clauses.back();
      Pronoun p{tok[1], std::nullopt};
      if (tok[2] != "NONE") {
        auto a = text::parse_int(tok[2]);
        if (!a || *a < 1 || static_cast<std::size_t>(*a) >= c.index)
          fail("pronoun antecedent must name an earlier clause");
        p.antecedent = static_cast<std::size_t>(*a);
      }
      c.pronouns.push_back(std::move(p));
    } else if (in_counts) {
      for (const auto& t : tok) {
        auto v = text::parse_int(t);
        if (!v || *v < 0) fail("bad subject mark count '" + t + "'");
        ann.subjects.marks_per_site.push_back(static_cast<int>(*v));
        have_counts = true;
      }
    } else {
      fail("unknown record '" + kw + "'");
    }
  }

  if (!have_header) throw ParseError("missing NARRATIVE record");
  if (!have_subjects) throw ParseError("missing SUBJECTS record");

  if (!marks.empty()) {
    if (marks.size() != static_cast<std::size_t>(ann.subjects.subject_count))
      throw ParseError("MARKS given for " + std::to_string(marks.size()) + " of " +
                       std::to_string(ann.subjects.subject_count) + " subjects");
    std::sort(marks.begin(), marks.end());
    std::vector<int> derived(sites, 0);
    std::vector<std::vector<std::size_t>> per_subject;
    for (auto& [s, chosen] : marks) {
      for (auto site : chosen) ++derived[site - 1];
      per_subject.push_back(chosen);
    }
    if (have_counts && derived != ann.subjects.marks_per_site)
      throw ParseError("per-subject MARKS disagree with the site counts");
    ann.subjects.marks_per_site = std::move(derived);
    ann.subjects.subject_sites = std::move(per_subject);
  }

  if (ann.subjects.marks_per_site.size() != sites)
    throw ParseError("expected " + std::to_string(sites) + " subject counts, got " +
                     std::to_string(ann.subjects.marks_per_site.size()));
  for (std::size_t i = 0; i < sites; ++i)
    if (ann.subjects.marks_per_site[i] > ann.subjects.subject_count)
      throw ParseError("site " + std::to_string(i + 1) + " has more marks than subjects");
  return ann;
}

inline Annotations parse_annotations(std::string_view source, std::size_t n_phrases) {
  std::istringstream in{std::string(source)};
  return parse_annotations(in, n_phrases);
}

inline std::string emit_annotations(const Narrative& n) {
  std::ostringstream out;
  const auto& s = n.subjects();
  out << "NARRATIVE " << n.id() << " " << n.phrase_count() << "\n";
  out << "SUBJECTS " << s.subject_count << "\n";
  for (std::size_t i = 0; i < s.marks_per_site.size(); ++i)
    out << s.marks_per_site[i] << ((i + 1) % 20 == 0 || i + 1 == s.marks_per_site.size() ? "\n" : " ");
  if (s.subject_sites) {
    for (std::size_t k = 0; k < s.subject_sites->size(); ++k) {
      out << "MARKS " << (k + 1);
      for (auto site : (*s.subject_sites)[k]) out << " " << site;
      out << "\n";
    }
  }
  for (const auto& c : n.clauses()) {
    out << "CLAUSE " << c.index << " " << c.start_phrase << " " << (c.coref ? '+' : '-') << " "
        << (c.infer ? '+' : '-') << "\n";
    for (const auto& p : c.pronouns)
      out << "PRONOUN " << p.token << " " << (p.antecedent ? std::to_string(*p.antecedent) : "NONE") << "\n";
  }
  return out.str();
}

inline Narrative make_narrative(std::vector<ProsodicPhrase> phrases, Annotations ann) {
  return Narrative(std::move(ann.narrative_id), std::move(phrases), std::move(ann.clauses), std::move(ann.subjects));
}

// Reads <transcript> and its sidecar; errors carry the offending file name.
inline Narrative load_narrative(const std::filesystem::path& transcript, const std::filesystem::path& annotations,
                                ParseMode mode = ParseMode::strict, std::vector<ParseWarning>* warnings = nullptr) {
  std::ifstream tin(transcript);
  if (!tin) throw ParseError("cannot open transcript", 0, transcript.string());
  std::vector<ProsodicPhrase> phrases;
  try {
    phrases = parse_transcript(tin, mode, warnings);
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line(), transcript.string());
  }
  std::ifstream ain(annotations);
  if (!ain) throw ParseError("cannot open annotations", 0, annotations.string());
  Annotations ann;
  try {
    ann = parse_annotations(ain, phrases.size());
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line(), annotations.string());
  }
  try {
    return make_narrative(std::move(phrases), std::move(ann));
  } catch (const SchemaError& e) {
    throw ParseError(e.what(), 0, annotations.string());
  }
}

}  // namespace narseg

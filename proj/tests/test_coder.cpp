#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "narseg/coder.hpp"
#include "narseg/synth.hpp"

using namespace narseg;

namespace {

const std::string kDir = NARSEG_TEST_DATA;

Narrative excerpt() {
  return load_narrative(kDir + "/excerpt/excerpt.txt", kDir + "/excerpt/excerpt.ann");
}

// "-" no cue, "and", "other"
std::string cue_class(bool cue, const std::optional<std::string>& w) {
  if (!cue || !w) return "-";
  return *w == "and" ? "and" : "other";
}

}  // namespace

TEST(Coder, ExcerptSiteOne) {
  auto records = code_narrative(excerpt());
  ASSERT_EQ(records.size(), 7u);
  const auto& v = records[0].features;
  std::vector<std::string> got;
  for (auto f : kFeatures) got.push_back(f == Feature::duration ? text::fixed(v.duration, 2) : categorical_value(v, f));
  std::vector<std::string> want = {"+sfc", "-sfc", "true", "0.75", "false", "NA",
                                   "false", "NA", "+coref", "-infer", "+gp", "true"};
  EXPECT_EQ(got, want);
}

TEST(Coder, ExcerptOtherSites) {
  auto r = code_narrative(excerpt());
  // "but there.." opens with a cue
  EXPECT_TRUE(r[5].features.cue1);
  EXPECT_EQ(r[5].features.word1, "but");
  EXPECT_EQ(r[5].features.cue_prosody, CueProsody::no);
  // "like the birds" : cue, no pause
  EXPECT_EQ(r[4].features.word1, "like");
  // "you know" starts no clause
  EXPECT_EQ(r[3].features.coref, NpValue::na);
  EXPECT_EQ(r[3].features.global_pro, NpValue::na);
  EXPECT_DOUBLE_EQ(r[1].features.duration, 1.35);
  EXPECT_EQ(r[1].features.after, Contour::sentence_final);
}

TEST(Coder, LabelsAtThreeOfSeven) {
  auto labels = label_sites(excerpt().subjects(), 3);
  std::vector<std::size_t> b;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == Label::boundary) b.push_back(i + 1);
  EXPECT_EQ(b, (std::vector<std::size_t>{2, 7}));
}

TEST(Coder, LabelThresholdMonotone) {
  auto s = excerpt().subjects();
  for (int t = 1; t < 7; ++t) {
    auto lo = label_sites(s, t), hi = label_sites(s, t + 1);
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (hi[i] == Label::boundary) EXPECT_EQ(lo[i], Label::boundary);
  }
  EXPECT_THROW(label_sites(s, 0), ConfigError);
  EXPECT_THROW(label_sites(s, 8), ConfigError);
}

TEST(Coder, CueProsodyTruthTable) {
  const std::set<std::pair<std::string, std::string>> complex_patterns = {
      {"other", "-"}, {"other", "and"}, {"other", "other"}, {"and", "other"}};
  const std::vector<std::optional<std::string>> words = {std::nullopt, "and", "so"};
  int combos = 0, mismatches = 0;
  for (auto before : {Contour::sentence_final, Contour::non_sentence_final})
    for (bool pause : {false, true})
      for (bool cue1 : {false, true})
        for (const auto& w1 : words)
          for (bool cue2 : {false, true})
            for (const auto& w2 : words) {
              ++combos;
              bool cx = before == Contour::sentence_final && pause &&
                        complex_patterns.count({cue_class(cue1, w1), cue_class(cue2, w2)});
              CueProsody want = cx ? CueProsody::complex : (pause ? CueProsody::yes : CueProsody::no);
              if (code_cue_prosody(before, pause, cue1, w1, cue2, w2) != want) ++mismatches;
            }
  EXPECT_GE(combos, 96);
  EXPECT_EQ(mismatches, 0);
}

TEST(Coder, GlobalProFollowsLastBoundary) {
  std::vector<ClauseAnnotation> c(3);
  c[0] = {1, 1, false, false, {}};
  c[1] = {2, 2, false, false, {{"he", 1}}};
  c[2] = {3, 4, false, false, {{"it", 2}}};
  EXPECT_EQ(code_np(1, c, std::nullopt).global_pro, NpValue::plus);
  EXPECT_EQ(code_np(1, c, 1).global_pro, NpValue::minus);
  EXPECT_EQ(code_np(3, c, 1).global_pro, NpValue::plus);
  EXPECT_EQ(code_np(3, c, 2).global_pro, NpValue::minus);
  // phrase 3 starts no clause
  auto na = code_np(2, c, std::nullopt);
  EXPECT_EQ(na.coref, NpValue::na);
  EXPECT_EQ(na.infer, NpValue::na);
  EXPECT_EQ(na.global_pro, NpValue::na);
}

TEST(Coder, NoPronounsIsMinus) {
  std::vector<ClauseAnnotation> c = {{1, 1, false, false, {}}, {2, 2, true, false, {{"they", std::nullopt}}}};
  EXPECT_EQ(code_np(1, c, std::nullopt).global_pro, NpValue::minus);
  EXPECT_EQ(code_np(1, c, std::nullopt).coref, NpValue::plus);
}

TEST(Coder, LexicalItems) {
  EXPECT_EQ(lexical_items("[.7] A-nd he's not"), (std::vector<std::string>{"and", "he's", "not"}));
  EXPECT_EQ(lexical_items("'Okay,' he said"), (std::vector<std::string>{"okay", "he", "said"}));
  EXPECT_EQ(lexical_items("but there.. the"), (std::vector<std::string>{"but", "there", "the"}));
  auto lex = CueLexicon::defaults();
  ProsodicPhrase p;
  p.text = "and so then";
  auto c = code_cues(p, lex);
  EXPECT_EQ(c.word1, "and");
  EXPECT_EQ(c.word2, "so");
  p.text = "the man";
  EXPECT_FALSE(code_cues(p, lex).cue1);
}

TEST(Coder, LexiconFileMatchesDefaults) {
  auto loaded = CueLexicon::load(std::filesystem::path(NARSEG_DATA "/cue_lexicon.txt"));
  EXPECT_EQ(loaded.words(), CueLexicon::defaults().words());
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(CueLexicon::load(empty), ConfigError);
}

TEST(Coder, CodedRecordsSatisfyInvariants) {
  GeneratorConfig g;
  g.labeling = Labeling::simulated;
  for (const auto& n : generate_corpus(g))
    for (const auto& r : code_narrative(n)) {
      auto bad = invariant_violation(r.features);
      ASSERT_FALSE(bad) << n.id() << " site " << r.site_index << ": " << *bad;
    }
}

TEST(Coder, FeatureTableRoundTrip) {
  GeneratorConfig g;
  g.phrase_counts = {40, 60};
  std::vector<SiteRecord> all;
  for (const auto& n : generate_corpus(g)) {
    auto r = code_narrative(n);
    all.insert(all.end(), r.begin(), r.end());
  }
  std::stringstream s;
  write_feature_table(s, all, {GlobalProMode::dynamic_mode, 4});
  auto t = read_feature_table(s);
  EXPECT_EQ(t.meta.global_pro_mode, GlobalProMode::dynamic_mode);
  EXPECT_EQ(t.meta.threshold, 4);
  ASSERT_EQ(t.records.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(t.records[i].features, all[i].features) << i;
    EXPECT_EQ(t.records[i].label, all[i].label);
    EXPECT_EQ(t.records[i].site_index, all[i].site_index);
  }
}

TEST(Coder, FeatureTableRejectsBadRows) {
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(read_feature_table(bad_header), ParseError);
  std::string head =
      "narrative_id,site_index,before,after,pause,duration,cue1,word1,cue2,word2,coref,infer,global.pro,cue-prosody,"
      "label\n";
  std::istringstream bad_value(head + "x,1,+sfc,-sfc,maybe,0,false,NA,false,NA,NA,NA,NA,false,boundary\n");
  EXPECT_THROW(read_feature_table(bad_value), ParseError);
  std::istringstream dash_label(head + "x,1,+sfc,-sfc,false,0,false,NA,false,NA,NA,NA,NA,false,non-boundary\n");
  EXPECT_EQ(read_feature_table(dash_label).records.at(0).label, Label::non_boundary);
}

TEST(Schema, CanonicalSpellings) {
  EXPECT_EQ(canonical_value(Feature::before, "+sentence.final.contour"), "+sfc");
  EXPECT_EQ(canonical_value(Feature::before, "+s.f.c"), "+sfc");
  EXPECT_EQ(canonical_value(Feature::global_pro, "+global.pro"), "+gp");
  EXPECT_FALSE(canonical_value(Feature::coref, "yes"));
  EXPECT_EQ(parse_feature("global_pro"), Feature::global_pro);
  EXPECT_EQ(parse_feature("cue-prosody"), Feature::cue_prosody);
}

#include <gtest/gtest.h>

#include "narseg/segmenter.hpp"
#include "narseg/synth.hpp"
#include "support.hpp"

using namespace narseg;
using narseg::fixtures::TreeMaker;

namespace {

std::vector<std::size_t> sites(const Segmentation& s) { return s.boundary_sites(); }

}  // namespace

TEST(NpAlgorithms, HandTrace) {
  auto n = fixtures::np_trace_narrative();
  EXPECT_EQ(sites(np_condition1(n)), (std::vector<std::size_t>{5}));
  EXPECT_EQ(sites(np_condition2(n)), (std::vector<std::size_t>{1, 3, 5}));
}

TEST(NpAlgorithms, StaticTableMatchesCondition1) {
  auto n = fixtures::np_trace_narrative();
  auto records = code_narrative(n);
  auto c1 = np_condition1(n);
  for (const auto& r : records) {
    NpFeatures np{r.features.coref, r.features.infer, r.features.global_pro};
    EXPECT_EQ(np_conjunction(np), c1.decisions[r.site_index - 1] == Label::boundary) << r.site_index;
  }
  // site 3 links back to clause 1 while no boundary has been placed
  EXPECT_EQ(records[2].features.global_pro, NpValue::plus);
}

TEST(NpAlgorithms, Condition1WithinCondition2) {
  GeneratorConfig g;
  g.labeling = Labeling::simulated;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    g.seed = seed;
    for (const auto& n : generate_corpus(g)) {
      auto c1 = np_condition1(n), c2 = np_condition2(n);
      for (std::size_t i = 0; i < c1.decisions.size(); ++i)
        if (c1.decisions[i] == Label::boundary) ASSERT_EQ(c2.decisions[i], Label::boundary) << n.id() << " " << i + 1;
    }
  }
}

TEST(NpAlgorithms, NoClausesNoBoundaries) {
  auto phrases = parse_transcript("a.\n[2.0] So b.\nc,\n");
  SubjectAnnotation s;
  s.marks_per_site = {0, 0};
  Narrative n("bare", phrases, {}, s);
  EXPECT_TRUE(sites(np_condition1(n)).empty());
  EXPECT_EQ(sites(np_condition2(n)), (std::vector<std::size_t>{1}));
}

TEST(BuiltinTree, GoldenVectors) {
  auto tree = builtin_tree();
  auto golden = fixtures::builtin_tree_golden();
  ASSERT_EQ(golden.size(), 23u);
  for (const auto& r : golden) EXPECT_EQ(classify(tree, r.features), r.label) << "row " << r.site_index;
}

TEST(BuiltinTree, ExpandedAgrees) {
  auto a = builtin_tree(false), b = builtin_tree(true);
  for (const auto& r : fixtures::builtin_tree_golden()) EXPECT_EQ(classify(a, r.features), classify(b, r.features));
  EXPECT_GT(tree::leaf_count(b.root), tree::leaf_count(a.root));
}

TEST(BuiltinTree, ExcerptSiteOneIsNonBoundary) {
  auto records = code_narrative(fixtures::excerpt());
  EXPECT_EQ(classify(builtin_tree(), records[0].features), Label::non_boundary);
}

TEST(BuiltinTree, UncoveredWordIsSchemaError) {
  auto records = fixtures::builtin_tree_golden();
  auto r = records[5];  // +coref, after -sfc path through word1
  r.features.cue1 = true;
  r.features.word1 = "still";
  EXPECT_THROW(classify(builtin_tree(), r.features), UncoveredValue);
  std::vector<SiteRecord> one(1, r);
  EXPECT_THROW(apply_tree(builtin_tree(), one), SchemaError);
}

TEST(Tree, ThresholdIsInclusiveOnTheLeft) {
  DecisionTree t{tree::threshold(Feature::duration, 0.6, tree::leaf(Label::non_boundary), tree::leaf(Label::boundary))};
  FeatureVector v;
  v.pause = true;
  v.duration = 0.6;
  EXPECT_EQ(classify(t, v), Label::non_boundary);
  v.duration = 0.6000001;
  EXPECT_EQ(classify(t, v), Label::boundary);
}

TEST(Tree, DefaultBranch) {
  DecisionTree t{tree::categorical(Feature::coref, {{{"+coref"}, tree::leaf(Label::non_boundary)}}, Label::boundary)};
  FeatureVector v;
  v.coref = NpValue::minus;
  EXPECT_EQ(classify(t, v), Label::boundary);
}

TEST(Tree, TextRoundTrip) {
  TreeMaker make(5);
  for (int i = 0; i < 200; ++i) {
    auto t = make.make();
    ASSERT_NO_THROW(tree::validate(t));
    auto text = emit_tree_text(t);
    auto back = parse_tree_text(text);
    ASSERT_EQ(back, t) << text;
    EXPECT_EQ(emit_tree_text(back), text);
  }
}

TEST(Tree, JsonRoundTrip) {
  TreeMaker make(6);
  for (int i = 0; i < 200; ++i) {
    auto t = make.make();
    auto back = parse_tree_json(emit_tree_json(t));
    ASSERT_EQ(back, t) << emit_tree_json(t);
  }
}

TEST(Tree, BuiltinTextRoundTrip) {
  for (bool expand : {false, true}) {
    auto t = builtin_tree(expand);
    EXPECT_EQ(parse_tree_text(emit_tree_text(t)), t);
    EXPECT_EQ(parse_tree_json(emit_tree_json(t)), t);
  }
}

TEST(Tree, ValidateRejectsBadTrees) {
  using namespace tree;
  EXPECT_THROW(validate(DecisionTree{threshold(Feature::before, 1, leaf(Label::boundary), leaf(Label::boundary))}),
               SchemaError);
  EXPECT_THROW(validate(DecisionTree{categorical(Feature::duration, {{{"1"}, leaf(Label::boundary)}})}), SchemaError);
  EXPECT_THROW(validate(DecisionTree{categorical(Feature::pause, {{{"true"}, leaf(Label::boundary)},
                                                                  {{"true"}, leaf(Label::boundary)}})}),
               SchemaError);
  auto inner = categorical(Feature::pause, {{{"true"}, leaf(Label::boundary)}, {{"false"}, leaf(Label::boundary)}});
  auto outer = categorical(Feature::pause, {{{"true"}, inner}, {{"false"}, leaf(Label::boundary)}});
  EXPECT_THROW(validate(DecisionTree{outer}), SchemaError);
}

TEST(Tree, ParseErrors) {
  EXPECT_THROW(parse_tree_text("if pause = true then\n"), ParseError);
  EXPECT_THROW(parse_tree_text("if colour = red then boundary\nelseif colour = blue then non_boundary\n"), ParseError);
  EXPECT_THROW(parse_tree_json("{\"format\":\"narseg-tree\",\"version\":1}"), ParseError);
  EXPECT_THROW(parse_tree_json("not json"), ParseError);
}

TEST(Tree, ThresholdBranchesInEitherOrder) {
  auto t = parse_tree_text("if duration > 0.5 then boundary\nelseif duration <= 0.5 then non_boundary\n");
  FeatureVector v;
  v.pause = true;
  v.duration = 0.5;
  EXPECT_EQ(classify(t, v), Label::non_boundary);
  v.duration = 0.7;
  EXPECT_EQ(classify(t, v), Label::boundary);
}

TEST(ApplyTree, DynamicMatchesStaticWhenGlobalProUnused) {
  DecisionTree t{tree::categorical(
      Feature::before,
      {{{"+sfc"}, tree::threshold(Feature::duration, 0.6, tree::leaf(Label::non_boundary), tree::leaf(Label::boundary))},
       {{"-sfc"}, tree::leaf(Label::non_boundary)}})};
  GeneratorConfig g;
  g.phrase_counts = {50, 70};
  for (const auto& n : generate_corpus(g))
    EXPECT_EQ(apply_tree_dynamic(t, n), apply_tree(t, code_narrative(n)));
}

TEST(ApplyTree, DynamicGlobalProUsesOwnBoundaries) {
  DecisionTree t{tree::categorical(Feature::global_pro, {{{"-gp"}, tree::leaf(Label::boundary)},
                                                         {{"+gp", "NA"}, tree::leaf(Label::non_boundary)}})};
  auto n = fixtures::np_trace_narrative();
  auto st = apply_tree(t, code_narrative(n));
  auto dy = apply_tree_dynamic(t, n);
  EXPECT_EQ(st.boundary_sites(), (std::vector<std::size_t>{5}));
  EXPECT_EQ(dy.boundary_sites(), (std::vector<std::size_t>{5}));
  DecisionTree first{tree::categorical(Feature::before, {{{"+sfc"}, tree::leaf(Label::boundary)},
                                                         {{"-sfc"}, t.root}})};
  // once site 1 is a boundary, site 2's pronouns point outside the segment
  EXPECT_EQ(apply_tree(first, code_narrative(n)).boundary_sites(), (std::vector<std::size_t>{1, 3, 4, 5}));
  EXPECT_EQ(apply_tree_dynamic(first, n).boundary_sites(), (std::vector<std::size_t>{1, 2, 3, 4, 5}));
}

TEST(Segmentation, GroupByNarrative) {
  std::vector<SiteRecord> r(4);
  r[0].narrative_id = "b";
  r[0].site_index = 2;
  r[1].narrative_id = "a";
  r[1].site_index = 1;
  r[2].narrative_id = "b";
  r[2].site_index = 1;
  r[3].narrative_id = "a";
  r[3].site_index = 2;
  auto g = group_by_narrative(r);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0][0].narrative_id, "b");
  EXPECT_EQ(g[0][0].site_index, 1u);
  EXPECT_EQ(g[1][1].site_index, 2u);
}

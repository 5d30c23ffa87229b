#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixture_set.hpp"

using namespace stylemt;

namespace {

const AttrList kItalic = {{StyleKind::italic, std::nullopt}};

GoldRecord gold_of(const std::string &source, const std::string &target) {
  GoldRecord g;
  g.id = "g";
  g.source = parse_tagged(source, MarkupFormat::numbered_tags, {{1, kItalic}}).doc;
  g.gold_target = parse_tagged(target, MarkupFormat::numbered_tags, {{1, kItalic}}).doc;
  return g;
}

StyledTranslation pred_of(const std::string &target) {
  StyledTranslation t;
  t.method = MethodKind::nmt_tags;
  t.target = parse_tagged(target, MarkupFormat::numbered_tags, {{1, kItalic}}).doc;
  return t;
}

AlignmentMap map_of(std::size_t n, std::initializer_list<AlignmentMap::Pair> pairs) {
  AlignmentMap m(n, n);
  for (const auto &[j, i] : pairs) m.add(j, i);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sentence scoring

TEST(Score, ExactMatch) {
  const auto g = gold_of("a <S1>b c</S1>", "x <S1>y z</S1>");
  const auto s = score_sentence(pred_of("x <S1>y z</S1>"), g);
  EXPECT_TRUE(s.correct);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
  EXPECT_DOUBLE_EQ(s.f1, 1.0);
}

TEST(Score, PartialOverlap) {
  const auto g = gold_of("a <S1>b c</S1>", "x <S1>y z</S1>");
  const auto s = score_sentence(pred_of("<S1>x y</S1> z"), g);
  EXPECT_FALSE(s.correct);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 0.5);
}

TEST(Score, ZeroSpanPrediction) {
  const auto g = gold_of("a <S1>b</S1>", "x <S1>y</S1>");
  const auto s = score_sentence(pred_of("x y"), g);
  EXPECT_FALSE(s.correct);
  EXPECT_DOUBLE_EQ(s.precision, 0.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.0);
  EXPECT_DOUBLE_EQ(s.f1, 0.0);
}

TEST(Score, UsesAlternativeGold) {
  auto g = gold_of("a <S1>b</S1>", "x <S1>y</S1>");
  g.alt_targets.push_back(parse_tagged("<S1>w</S1> v", MarkupFormat::numbered_tags, {{1, kItalic}}).doc);
  EXPECT_TRUE(score_sentence(pred_of("<S1>w</S1> v"), g).correct);
  EXPECT_THROW(score_sentence(pred_of("q r"), g), Error);
}

TEST(Score, MismatchedTokensAreExcluded) {
  const auto g = gold_of("a <S1>b</S1>", "x <S1>y</S1>");
  const auto r = evaluate_method("nmt_tags", {{"g", pred_of("x <S1>q</S1>")}}, {g});
  EXPECT_EQ(r.excluded, 1u);
  EXPECT_EQ(r.scored, 0u);
}

TEST(Score, FixtureSetMismatch) {
  const auto g = gold_of("a <S1>b</S1>", "x <S1>y</S1>");
  try {
    evaluate_method("nmt_tags", {{"other", pred_of("x <S1>y</S1>")}}, {g});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::fixture_set_mismatch);
  }
}

// ---------------------------------------------------------------------------
// Contiguity

TEST(Contiguity, Examples) {
  auto doc = make_plain("a b c d");
  doc.spans = {{1, kItalic, {2, 3}}};
  EXPECT_TRUE(contiguity(doc, 1));
  doc.spans = {{1, kItalic, {0, 1}}, {1, kItalic, {1, 2}}};
  EXPECT_TRUE(contiguity(doc, 1));
  doc.spans = {{1, kItalic, {0, 1}}, {1, kItalic, {3, 4}}};
  EXPECT_FALSE(contiguity(doc, 1));
  EXPECT_THROW(contiguity(doc, 2), Error);
  EXPECT_TRUE(all_contiguous(make_plain("a b")));
}

TEST(Contiguity, SplitGermanSpan) {
  const auto set = fixtures::load("walkthrough");
  EXPECT_TRUE(all_contiguous(set.gold("february").source));
  EXPECT_FALSE(all_contiguous(set.gold("february").gold_target));
}

TEST(Contiguity, MergeInvariant) {
  auto doc = make_plain("a b c d");
  doc.spans = {{1, kItalic, {0, 1}}, {1, kItalic, {1, 2}}, {1, kItalic, {3, 4}}};
  const bool before = contiguity(doc, 1);
  merge_spans(doc);
  EXPECT_EQ(contiguity(doc, 1), before);
}

// ---------------------------------------------------------------------------
// AER

TEST(Aer, Values) {
  EXPECT_DOUBLE_EQ(aer(map_of(3, {{0, 0}, {1, 1}}), map_of(3, {{0, 0}, {1, 1}})).aer, 0.0);
  EXPECT_DOUBLE_EQ(aer(map_of(3, {{0, 1}}), map_of(3, {{0, 0}, {1, 1}})).aer, 1.0);
  EXPECT_NEAR(aer(map_of(3, {{0, 0}}), map_of(3, {{0, 0}, {1, 1}})).aer, 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(aer(map_of(3, {}), map_of(3, {})).aer, 0.0);
  EXPECT_THROW(aer(map_of(3, {}), map_of(2, {})), Error);
}

TEST(Aer, RestrictRows) {
  EXPECT_EQ(restrict_rows(map_of(3, {{0, 0}, {1, 1}, {2, 2}}), {0, 2}).pairs(),
            (std::set<AlignmentMap::Pair>{{0, 0}, {2, 2}}));
}

// ---------------------------------------------------------------------------
// Sweep

TEST(Sweep, ParseRange) {
  EXPECT_EQ(parse_sweep_range("0.0:1.0:0.1").size(), 11u);
  EXPECT_EQ(parse_sweep_range("0.2:0.2:0.5"), (std::vector<double>{0.2}));
  EXPECT_THROW(parse_sweep_range("0:1"), Error);
  EXPECT_THROW(parse_sweep_range("1:0:0.1"), Error);
  EXPECT_THROW(parse_sweep_range("0:1:0"), Error);
}

TEST(Sweep, PairCountsNeverIncrease) {
  const auto set = fixtures::load("comparison");
  const auto t = threshold_sweep(set.golds, set.matrix_list, set.lexicon, 3, parse_sweep_range("0:1:0.1"));
  ASSERT_EQ(t.rows.size(), 11u);
  EXPECT_TRUE(t.monotone);
  for (std::size_t n = 1; n < t.rows.size(); ++n) EXPECT_LE(t.rows[n].pair_count, t.rows[n - 1].pair_count);
  EXPECT_DOUBLE_EQ(t.rows.front().mean_f1, 1.0);
  EXPECT_DOUBLE_EQ(t.rows.back().mean_f1, 0.0);
  EXPECT_EQ(t.rows.back().pair_count, 0u);
  EXPECT_EQ(render_sweep(t).substr(0, 33), "threshold,mean_f1,mean_aer,pairs\n");
}

TEST(Sweep, UnsortedRejected) {
  const auto set = fixtures::load("comparison");
  EXPECT_THROW(threshold_sweep(set.golds, set.matrix_list, set.lexicon, 3, {0.5, 0.1}), Error);
}

// ---------------------------------------------------------------------------
// Comparison

TEST(Compare, NoReportsGivesHeaderOnly) {
  const auto set = fixtures::load("comparison");
  const auto t = build_comparison(set.golds, {});
  EXPECT_EQ(t.header.size(), 4u);
  EXPECT_TRUE(t.rows.empty());
}

TEST(Compare, SingleMethodAddsTwoColumns) {
  const auto set = fixtures::load("comparison");
  const auto t = build_comparison(set.golds, {set.report(MethodKind::attention)});
  EXPECT_EQ(t.header.size(), 6u);
  EXPECT_EQ(t.rows.size(), 10u);
  EXPECT_EQ(t.footer.back(), "10/10");
}

TEST(Compare, FixtureRows) {
  const auto set = fixtures::load("comparison");
  std::vector<MethodReport> reports;
  for (auto m : kAllMethods) reports.push_back(set.report(m));
  const auto t = build_comparison(set.golds, reports);
  ASSERT_EQ(t.rows.size(), 10u);
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"2", "hyperlink", "nearly fivefold", "y", "y", "✓", "y", "✓",
                                                 "y", "✓", "y", "✓"}));
  EXPECT_EQ(t.rows[3][5], "✓");
  EXPECT_EQ(t.rows[3][7], "X");
  EXPECT_EQ(t.rows[3][9], "X");
  EXPECT_EQ(t.rows[3][11], "X");
  EXPECT_EQ(t.footer, (std::vector<std::string>{"", "", "correct", "", "", "10/10", "", "7/10", "", "9/10", "",
                                                "9/10"}));

  std::ifstream in(fixtures::data_dir() / "comparison_expected.csv");
  std::stringstream expected;
  expected << in.rdbuf();
  EXPECT_EQ(render_comparison_csv(t), expected.str());
}

TEST(Compare, ReportForOtherSetRejected) {
  const auto t7 = fixtures::load("comparison");
  const auto g = gold_of("a <S1>b</S1>", "x <S1>y</S1>");
  const auto r = evaluate_method("nmt_tags", {{"g", pred_of("x <S1>y</S1>")}}, {g});
  try {
    build_comparison(t7.golds, {r});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::fixture_set_mismatch);
  }
}

// ---------------------------------------------------------------------------
// IBM1 baseline

TEST(Ibm1Baseline, BelowAttentionOnFixtureSet) {
  const auto set = fixtures::load("comparison");
  const auto attention = set.report(MethodKind::attention);
  const auto ibm1 = evaluate_method("ibm1", ibm1_predictions(set.golds, 10), set.golds);
  EXPECT_EQ(ibm1.scored, 10u);
  EXPECT_LT(ibm1.mean_f1, attention.mean_f1);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stylemt/alignment.hpp"
#include "stylemt/attention.hpp"
#include "stylemt/ibm1.hpp"
#include "stylemt/lexicon.hpp"

using namespace stylemt;

namespace {

ErrorKind kind_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "no stylemt::Error thrown";
  return ErrorKind::invalid_argument;
}

EmbeddingLexicon lexicon_from(const std::string &text) {
  std::istringstream in(text);
  return load_lexicon(in);
}

}  // namespace

TEST(Cosine, Examples) {
  const std::vector<double> v = {0.3, -2.0, 5.0};
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 1}), 1.0 / std::sqrt(2.0), 1e-9);
}

TEST(Cosine, Errors) {
  EXPECT_EQ(kind_of([] { cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}); }),
            ErrorKind::zero_vector);
  EXPECT_EQ(kind_of([] { cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 0}); }),
            ErrorKind::dimension_mismatch);
}

TEST(Cosine, SymmetryAndScaleInvariance) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> val(-5, 5), scale(0.01, 100);
  for (int n = 0; n < 500; ++n) {
    std::vector<double> a(1 + n % 7), b(a.size());
    for (auto &x : a) x = val(rng);
    for (auto &x : b) x = val(rng);
    a[0] += 6.0;  // keep norms away from zero
    b[0] += 6.0;
    const double ab = cosine_similarity(a, b);
    EXPECT_NEAR(ab, cosine_similarity(b, a), 1e-9);
    auto ca = a;
    const double c = scale(rng);
    for (auto &x : ca) x *= c;
    EXPECT_NEAR(ab, cosine_similarity(ca, b), 1e-9);
    EXPECT_LE(std::abs(ab), 1.0);
  }
}

TEST(TopK, Examples) {
  EXPECT_EQ(top_k_indices(std::vector<double>{0.1, 0.7, 0.2}, 3), (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(top_k_indices(std::vector<double>{0.5, 0.5}, 1), (std::vector<std::size_t>{0}));
  EXPECT_EQ(top_k_indices(std::vector<double>{0.4, 0.6}, 3), (std::vector<std::size_t>{1, 0}));
}

TEST(Matrix, RowSumInvariant) {
  EXPECT_NO_THROW(AlignmentMatrix({"a"}, {"x", "y"}, {{0.5, 0.5005}}));
  EXPECT_EQ(kind_of([] { AlignmentMatrix({"a"}, {"x", "y"}, {{0.5, 0.49}}); }), ErrorKind::format_error);
  EXPECT_EQ(kind_of([] { AlignmentMatrix({"a"}, {"x", "y"}, {{1.0}}); }), ErrorKind::dimension_mismatch);
  EXPECT_EQ(kind_of([] { AlignmentMatrix({"a"}, {"x", "y"}, {{1.5, -0.5}}); }), ErrorKind::format_error);
}

TEST(Map, BoundsAndSetSemantics) {
  AlignmentMap m(2, 3);
  m.add(0, 2);
  m.add(0, 2);
  m.add(1, 2);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_THROW(m.add(2, 0), Error);
  EXPECT_THROW(m.add(0, 3), Error);
}

// ---------------------------------------------------------------------------
// Attention alignment

namespace {

const char *kToyLexicon = "6 3\nthe 1 0 0\ndas 1 0 0\nred 0 1 0\nrote 0 1 0\ncar 0 0 1\nauto 0 0 1\n";

AlignmentMatrix toy_matrix() {
  return AlignmentMatrix({"the", "red", "car"}, {"das", "rote", "auto"},
                         {{0.6, 0.3, 0.1}, {0.2, 0.7, 0.1}, {0.1, 0.2, 0.7}});
}

}  // namespace

TEST(Attention, Derived3x3) {
  const auto lex = lexicon_from(kToyLexicon);
  const auto map = attention_align(toy_matrix(), {0, 2}, lex, {3, 0.5, OovPolicy::permissive});
  EXPECT_EQ(map.pairs(), (std::set<AlignmentMap::Pair>{{0, 0}, {2, 2}}));
  const auto k1 = attention_align(toy_matrix(), {0, 2}, lex, {1, 0.5, OovPolicy::permissive});
  for (const auto &p : k1.pairs()) EXPECT_TRUE(map.contains(p.first, p.second));
}

TEST(Attention, DiagonalIdentity) {
  const auto lex = lexicon_from(kToyLexicon);
  const AlignmentMatrix m({"the", "red", "car"}, {"the", "red", "car"}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(attention_align(m, {0, 1, 2}, lex, {}).pairs(),
            (std::set<AlignmentMap::Pair>{{0, 0}, {1, 1}, {2, 2}}));
}

TEST(Attention, ThresholdOneIsExclusive) {
  const auto lex = lexicon_from(kToyLexicon);
  EXPECT_TRUE(attention_align(toy_matrix(), {0, 1, 2}, lex, {3, 1.0, OovPolicy::permissive}).empty());
}

TEST(Attention, OovPolicies) {
  const auto lex = lexicon_from(kToyLexicon);
  const AlignmentMatrix m({"Kevin"}, {"Kevin", "das"}, {{0.4, 0.6}});
  // Permissive: only the rank-0 candidate passes on attention alone.
  EXPECT_EQ(attention_align(m, {0}, lex, {3, 0.5, OovPolicy::permissive}).pairs(),
            (std::set<AlignmentMap::Pair>{{0, 1}}));
  EXPECT_TRUE(attention_align(m, {0}, lex, {3, 0.5, OovPolicy::strict}).empty());
}

TEST(Attention, RejectsBadStyledIndex) {
  const auto lex = lexicon_from(kToyLexicon);
  EXPECT_THROW(attention_align(toy_matrix(), {3}, lex, {}), Error);
}

// Brute-force reference: enumerate every (j, i), compute its rank by
// counting strictly larger entries and equal entries at lower indices.
TEST(Attention, BruteForceOracle) { EXPECT_EQ(oracles::attention_mismatches(99, 200), 0); }

TEST(Attention, RaisingThresholdNeverAddsPairs) {
  std::mt19937 rng(5);
  const auto lex = lexicon_from(kToyLexicon);
  const std::vector<std::string> words = {"the", "das", "red", "rote", "car", "auto"};
  for (int n = 0; n < 100; ++n) {
    const std::size_t J = 1 + rng() % 5, I = 1 + rng() % 5;
    std::vector<std::string> src(J), tgt(I);
    for (auto &s : src) s = words[rng() % 6];
    for (auto &t : tgt) t = words[rng() % 6];
    std::vector<std::vector<double>> w(J, std::vector<double>(I, 1.0 / static_cast<double>(I)));
    const AlignmentMatrix m(src, tgt, w);
    std::set<std::size_t> all;
    for (std::size_t j = 0; j < J; ++j) all.insert(j);
    std::set<AlignmentMap::Pair> prev = attention_align(m, all, lex, {3, -1.0, OovPolicy::permissive}).pairs();
    for (double tau = -0.9; tau <= 1.0; tau += 0.1) {
      const auto cur = attention_align(m, all, lex, {3, tau, OovPolicy::permissive}).pairs();
      EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

// ---------------------------------------------------------------------------
// Lexicon

TEST(Lexicon, Parses) {
  const auto lex = lexicon_from("2 2\nhaus 1.0 0.0\nhouse 1.0 0.0\n");
  EXPECT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex.dimension(), 2u);
  EXPECT_TRUE(lex.contains("Haus"));
  EXPECT_TRUE(lex.warnings().empty());
}

TEST(Lexicon, CountMismatchWarns) {
  const auto lex = lexicon_from("5 2\nhaus 1.0 0.0\n");
  EXPECT_EQ(lex.size(), 1u);
  EXPECT_FALSE(lex.warnings().empty());
}

TEST(Lexicon, DuplicateKeepsFirst) {
  const auto lex = lexicon_from("2 2\nhaus 1 0\nhaus 0 1\n");
  EXPECT_EQ((*lex.lookup("haus"))[0], 1.0);
  EXPECT_FALSE(lex.warnings().empty());
}

TEST(Lexicon, Defects) {
  try {
    lexicon_from("2 2\nhaus 1.0 0.0\nhouse 1.0\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { lexicon_from("2 2\nhaus one 0\n"); }), ErrorKind::format_error);
  EXPECT_EQ(kind_of([] { lexicon_from("two 2\n"); }), ErrorKind::format_error);
  EXPECT_EQ(kind_of([] { lexicon_from("1 2\nhaus 0 0\n"); }), ErrorKind::format_error);
}

// ---------------------------------------------------------------------------
// IBM Model 1

namespace {

std::vector<SentencePair> toy_corpus() {
  return {{{"the", "house"}, {"das", "haus"}}, {{"the", "book"}, {"das", "buch"}}};
}

}  // namespace

TEST(Ibm1, FirstIterationByHand) {
  // Uniform 1/3 start; every target word splits its count evenly.
  const auto m = ibm1_train(toy_corpus(), 1);
  EXPECT_NEAR(m.prob("das", "the"), 0.5, 1e-12);
  EXPECT_NEAR(m.prob("haus", "the"), 0.25, 1e-12);
  EXPECT_NEAR(m.prob("buch", "the"), 0.25, 1e-12);
  EXPECT_NEAR(m.prob("haus", "house"), 0.5, 1e-12);
  EXPECT_NEAR(m.prob("das", "book"), 0.5, 1e-12);
}

TEST(Ibm1, MatchesReferenceEm) {
  // Values from an independent dense-matrix EM run, frozen.
  const auto m = ibm1_train(toy_corpus(), 20);
  EXPECT_NEAR(m.prob("das", "the"), 0.999945603678, 1e-9);
  EXPECT_NEAR(m.prob("haus", "the"), 0.000027198161, 1e-9);
  EXPECT_NEAR(m.prob("buch", "book"), 0.966125682746, 1e-9);
  EXPECT_NEAR(m.prob("das", "house"), 0.033874317254, 1e-9);
  const std::vector<double> ll = {-4.394449154672, -3.347952867143, -3.235269359277, -3.132348807590,
                                  -3.043614817693, -2.971004230686};
  for (std::size_t k = 0; k < ll.size(); ++k) EXPECT_NEAR(m.log_likelihood()[k], ll[k], 1e-9);
  EXPECT_NEAR(m.log_likelihood()[20], -2.774933906780, 1e-9);
  EXPECT_GT(m.prob("das", "the"), 0.9);
}

TEST(Ibm1, RowsSumToOneAndLikelihoodMonotone) {
  std::vector<SentencePair> corpus = toy_corpus();
  corpus.push_back({{"a", "book"}, {"ein", "buch"}});
  corpus.push_back({{"a", "small", "house"}, {"ein", "kleines", "haus"}});
  for (int iters = 1; iters <= 15; ++iters) {
    const auto m = ibm1_train(corpus, iters);
    for (const auto &[e, row] : m.table()) {
      double sum = 0;
      for (const auto &[f, p] : row) {
        EXPECT_GE(p, 0.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6) << e;
    }
    const auto &ll = m.log_likelihood();
    for (std::size_t k = 1; k < ll.size(); ++k) EXPECT_GE(ll[k], ll[k - 1] - 1e-9);
  }
}

TEST(Ibm1, SinglePairForcesMass) {
  const auto m = ibm1_train({{{"a"}, {"b"}}}, 1);
  EXPECT_DOUBLE_EQ(m.prob("b", "a"), 1.0);
  EXPECT_EQ(ibm1_align(m, {"a"}, {"b"}).pairs(), (std::set<AlignmentMap::Pair>{{0, 0}}));
}

TEST(Ibm1, Align) {
  const auto m = ibm1_train(toy_corpus(), 20);
  EXPECT_EQ(ibm1_align(m, {"the", "house"}, {"das", "haus"}).pairs(),
            (std::set<AlignmentMap::Pair>{{0, 0}, {1, 1}}));
  EXPECT_TRUE(ibm1_align(m, {"garden"}, {"das"}).empty());
}

TEST(Ibm1, Errors) {
  EXPECT_EQ(kind_of([] { ibm1_train({}, 3); }), ErrorKind::empty_corpus);
  EXPECT_EQ(kind_of([] { ibm1_train(toy_corpus(), 0); }), ErrorKind::invalid_argument);
}

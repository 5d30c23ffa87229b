#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "stylemt/attention.hpp"
#include "stylemt/lexicon.hpp"
#include "stylemt/markup.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Attention alignment by enumeration

/// Every (j, i) with j styled, i among the k heaviest nonzero cells of row j
/// (ties to the lower index) and cosine strictly above tau.
inline std::set<stylemt::AlignmentMap::Pair> brute_force_align(
    const std::vector<std::vector<double>> &w, const std::vector<std::string> &src,
    const std::vector<std::string> &tgt, const std::set<std::size_t> &styled,
    const stylemt::EmbeddingLexicon &lex, std::size_t k, double tau) {
  std::set<stylemt::AlignmentMap::Pair> out;
  for (std::size_t j : styled) {
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      if (w[j][i] <= 0.0) continue;
      std::size_t rank = 0;
      for (std::size_t o = 0; o < tgt.size(); ++o) rank += w[j][o] > w[j][i] || (w[j][o] == w[j][i] && o < i);
      if (rank >= k) continue;
      const auto a = *lex.lookup(src[j]);
      const auto b = *lex.lookup(tgt[i]);
      double dot = 0, na = 0, nb = 0;
      for (std::size_t d = 0; d < a.size(); ++d) {
        dot += a[d] * b[d];
        na += a[d] * a[d];
        nb += b[d] * b[d];
      }
      if (dot / (std::sqrt(na) * std::sqrt(nb)) > tau) out.insert({j, i});
    }
  }
  return out;
}

/// Random instances with J, I <= 8, small integer vectors and coarse weights
/// (many ties and zeros). Returns how many disagree with attention_align.
inline int attention_mismatches(unsigned seed, int instances) {
  std::mt19937 rng(seed);
  const std::vector<std::string> vocab = {"w0", "w1", "w2", "w3", "w4", "w5"};
  int mismatches = 0;
  for (int n = 0; n < instances; ++n) {
    const std::size_t dim = 1 + rng() % 4;
    stylemt::EmbeddingLexicon lex(dim);
    for (const auto &word : vocab) {
      std::vector<double> v(dim);
      for (auto &x : v) x = static_cast<double>(static_cast<int>(rng() % 5) - 2);
      if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
      lex.insert(word, v);
    }
    const std::size_t J = 1 + rng() % 8, I = 1 + rng() % 8;
    std::vector<std::string> src(J), tgt(I);
    for (auto &s : src) s = vocab[rng() % vocab.size()];
    for (auto &t : tgt) t = vocab[rng() % vocab.size()];
    std::vector<std::vector<double>> w(J, std::vector<double>(I));
    for (auto &row : w) {
      double sum = 0;
      for (auto &x : row) sum += (x = static_cast<double>(rng() % 4));
      if (sum == 0) row[rng() % I] = sum = 1;
      for (auto &x : row) x /= sum;
    }
    std::set<std::size_t> styled;
    for (std::size_t j = 0; j < J; ++j) {
      if (rng() % 2) styled.insert(j);
    }
    const std::size_t k = 1 + rng() % 4;
    const double tau = static_cast<double>(static_cast<int>(rng() % 11) - 3) / 10.0;

    const stylemt::AlignmentMatrix m(src, tgt, w);
    const auto got = stylemt::attention_align(m, styled, lex, {k, tau, stylemt::OovPolicy::permissive}).pairs();
    if (got != brute_force_align(w, src, tgt, styled, lex, k, tau)) ++mismatches;
  }
  return mismatches;
}

// ---------------------------------------------------------------------------
// Random styled documents

inline const std::vector<std::string> kWords = {"the", "Übung", "committee's", "10",  "three-day", "fiel",
                                                "Los", "„Zitat“", "(see)",     "x",   "e.g.",      "naïve"};
inline const std::vector<std::string> kTrailing = {"", "", "", ",", ".", "!", ";"};

inline stylemt::StyledText random_doc(std::mt19937 &rng, bool allow_overlap, int max_ids) {
  std::string text;
  const std::size_t n = 1 + rng() % 14;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) text += ' ';
    text += kWords[rng() % kWords.size()] + kTrailing[rng() % kTrailing.size()];
  }
  auto doc = stylemt::make_plain(text);
  const std::size_t T = doc.tokens.size();
  const int ids = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_ids));
  std::vector<bool> taken(T, false);
  for (int id = 1; id <= ids; ++id) {
    const stylemt::AttrList attrs = {{static_cast<stylemt::StyleKind>(id % 4), std::nullopt}};
    const int spans = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < spans; ++s) {
      std::size_t a = rng() % T, b = rng() % T;
      if (a > b) std::swap(a, b);
      bool clash = false;
      for (std::size_t k = a; k <= b; ++k) clash = clash || taken[k];
      if (clash && !allow_overlap) continue;
      for (std::size_t k = a; k <= b; ++k) taken[k] = !allow_overlap || taken[k];
      doc.spans.push_back({id, attrs, {a, b + 1}});
    }
    if (allow_overlap) std::fill(taken.begin(), taken.end(), false);
  }
  return doc;
}

inline bool same_styling(const stylemt::StyledText &a, const stylemt::StyledText &b) {
  return a.text == b.text && stylemt::styled_token_sets(a) == stylemt::styled_token_sets(b) &&
         stylemt::style_table(a) == stylemt::style_table(b);
}

/// Render then parse `count` random documents; returns the number that do
/// not come back unchanged or that raise anomalies. Delimiter documents
/// never overlap and use numbered delimiters when they carry several ids.
inline int roundtrip_failures(stylemt::MarkupFormat format, unsigned seed, int count) {
  using namespace stylemt;
  std::mt19937 rng(seed);
  int failures = 0;
  for (int n = 0; n < count; ++n) {
    ParseResult r;
    if (format == MarkupFormat::numbered_tags) {
      const auto doc = random_doc(rng, true, 3);
      r = parse_tagged(render_tagged(doc, format), format, style_table(doc));
      if (!r.anomalies.empty() || !same_styling(doc, r.doc)) ++failures;
    } else {
      const auto doc = random_doc(rng, false, n % 2 ? 3 : 1);
      const auto table = style_table(doc);
      const auto wire = render_tagged(doc, format, {table.size() > 1});
      r = parse_tagged(wire, format, table, {table.begin()->first});
      if (!r.anomalies.empty() || !same_styling(doc, r.doc)) ++failures;
    }
  }
  return failures;
}

}  // namespace oracles

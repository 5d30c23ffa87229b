#pragma once

// IBM Model 1 lexical translation probabilities trained with EM. A reduced
// stand-in for full statistical aligners: no NULL word, no distortion.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stylemt/alignment.hpp"
#include "stylemt/error.hpp"

namespace stylemt {

using SentencePair = std::pair<std::vector<std::string>, std::vector<std::string>>;

class Ibm1Model {
 public:
  /// t(target | source); 0 for unseen pairs.
  double prob(const std::string &target, const std::string &source) const {
    const auto s = table_.find(source);
    if (s == table_.end()) return 0.0;
    const auto t = s->second.find(target);
    return t == s->second.end() ? 0.0 : t->second;
  }

  bool knows_source(const std::string &source) const { return table_.count(source) != 0; }

  /// Row for one source word: target -> probability.
  const std::map<std::string, double> &row(const std::string &source) const {
    return table_.at(source);
  }

  const std::map<std::string, std::map<std::string, double>> &table() const { return table_; }
  int iterations() const { return iterations_; }

  /// Corpus log-likelihood before training (index 0) and after each iteration.
  const std::vector<double> &log_likelihood() const { return log_likelihood_; }

 private:
  friend Ibm1Model ibm1_train(const std::vector<SentencePair> &, int);

  std::map<std::string, std::map<std::string, double>> table_;
  int iterations_ = 0;
  std::vector<double> log_likelihood_;
};

/// sum over pairs, target words i: log( (1/J) sum_j t(f_i | e_j) ).
inline double ibm1_log_likelihood(const Ibm1Model &model, const std::vector<SentencePair> &corpus) {
  double ll = 0.0;
  for (const auto &[src, tgt] : corpus) {
    if (src.empty()) continue;
    for (const auto &f : tgt) {
      double p = 0.0;
      for (const auto &e : src) p += model.prob(f, e);
      ll += std::log(p / static_cast<double>(src.size()));
    }
  }
  return ll;
}

inline Ibm1Model ibm1_train(const std::vector<SentencePair> &corpus, int iterations) {
  if (corpus.empty()) throw Error(ErrorKind::empty_corpus, "IBM1 training corpus is empty");
  if (iterations < 1) throw Error(ErrorKind::invalid_argument, "iterations must be >= 1");

  Ibm1Model model;
  // Uniform over the target vocabulary. Only co-occurring pairs are stored;
  // every other entry stays 0 through EM anyway.
  std::map<std::string, std::map<std::string, double>> cooc;
  std::map<std::string, int> target_vocab;
  for (const auto &[src, tgt] : corpus) {
    for (const auto &f : tgt) target_vocab[f] = 1;
    for (const auto &e : src) {
      for (const auto &f : tgt) cooc[e][f] = 0.0;
    }
  }
  const double uniform = target_vocab.empty() ? 0.0 : 1.0 / static_cast<double>(target_vocab.size());
  for (auto &[e, row] : cooc) {
    for (auto &[f, p] : row) p = uniform;
  }
  model.table_ = std::move(cooc);
  model.log_likelihood_.push_back(ibm1_log_likelihood(model, corpus));

  for (int it = 0; it < iterations; ++it) {
    std::map<std::string, std::map<std::string, double>> counts;
    std::unordered_map<std::string, double> totals;
    for (const auto &[src, tgt] : corpus) {
      for (const auto &f : tgt) {
        double norm = 0.0;
        for (const auto &e : src) norm += model.prob(f, e);
        if (norm <= 0.0) continue;
        for (const auto &e : src) {
          const double c = model.prob(f, e) / norm;
          counts[e][f] += c;
          totals[e] += c;
        }
      }
    }
    for (auto &[e, row] : model.table_) {
      const double total = totals[e];
      if (total <= 0.0) continue;
      for (auto &[f, p] : row) {
        const auto c = counts[e].find(f);
        p = c == counts[e].end() ? 0.0 : c->second / total;
      }
    }
    ++model.iterations_;
    model.log_likelihood_.push_back(ibm1_log_likelihood(model, corpus));
  }
  return model;
}

/// Links every source word to its most probable target word (lowest index
/// on ties). Source words unseen in training, or with no positive
/// probability for any target word, stay unaligned.
inline AlignmentMap ibm1_align(const Ibm1Model &model, const std::vector<std::string> &source,
                               const std::vector<std::string> &target) {
  AlignmentMap map(source.size(), target.size());
  for (std::size_t j = 0; j < source.size(); ++j) {
    if (!model.knows_source(source[j])) continue;
    double best = 0.0;
    std::size_t best_i = target.size();
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double p = model.prob(target[i], source[j]);
      if (p > best) {
        best = p;
        best_i = i;
      }
    }
    if (best_i < target.size()) map.add(j, best_i);
  }
  return map;
}

}  // namespace stylemt

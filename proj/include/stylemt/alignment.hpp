#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stylemt/error.hpp"

namespace stylemt {

/// A many-to-many word alignment: a set of (source index, target index)
/// pairs over a J x I grid. Indices are 0-based.
class AlignmentMap {
 public:
  using Pair = std::pair<std::size_t, std::size_t>;

  AlignmentMap() = default;
  AlignmentMap(std::size_t source_len, std::size_t target_len)
      : source_len_(source_len), target_len_(target_len) {}

  std::size_t source_len() const { return source_len_; }
  std::size_t target_len() const { return target_len_; }

  void add(std::size_t j, std::size_t i) {
    if (j >= source_len_ || i >= target_len_)
      throw Error(ErrorKind::dimension_mismatch,
                  "pair (" + std::to_string(j) + "," + std::to_string(i) + ") outside " +
                      std::to_string(source_len_) + "x" + std::to_string(target_len_));
    pairs_.emplace(j, i);
  }

  bool contains(std::size_t j, std::size_t i) const { return pairs_.count({j, i}) != 0; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::set<Pair> &pairs() const { return pairs_; }

  /// Target indices aligned to source index j.
  std::vector<std::size_t> targets_of(std::size_t j) const {
    std::vector<std::size_t> out;
    for (auto it = pairs_.lower_bound({j, 0}); it != pairs_.end() && it->first == j; ++it)
      out.push_back(it->second);
    return out;
  }

  friend bool operator==(const AlignmentMap &, const AlignmentMap &) = default;

 private:
  std::size_t source_len_ = 0;
  std::size_t target_len_ = 0;
  std::set<Pair> pairs_;
};

inline nlohmann::json map_to_json(const AlignmentMap &map) {
  auto pairs = nlohmann::json::array();
  for (const auto &[j, i] : map.pairs()) pairs.push_back({j, i});
  return nlohmann::json{
      {"source_len", map.source_len()}, {"target_len", map.target_len()}, {"pairs", pairs}};
}

inline AlignmentMap map_from_pairs_json(const nlohmann::json &pairs, std::size_t source_len,
                                        std::size_t target_len) {
  AlignmentMap map(source_len, target_len);
  for (const auto &p : pairs) {
    if (!p.is_array() || p.size() != 2)
      throw Error(ErrorKind::format_error, "alignment pair must be [j, i]");
    map.add(p[0].get<std::size_t>(), p[1].get<std::size_t>());
  }
  return map;
}

/// Source x target score matrix; row j holds how strongly each target word
/// attends to source word j. Rows are probability distributions.
class AlignmentMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-3;

  AlignmentMatrix(std::vector<std::string> source_tokens, std::vector<std::string> target_tokens,
                  std::vector<std::vector<double>> weights)
      : source_(std::move(source_tokens)),
        target_(std::move(target_tokens)),
        weights_(std::move(weights)) {
    validate();
  }

  std::size_t rows() const { return source_.size(); }
  std::size_t cols() const { return target_.size(); }
  const std::vector<std::string> &source_tokens() const { return source_; }
  const std::vector<std::string> &target_tokens() const { return target_; }
  std::span<const double> row(std::size_t j) const { return weights_.at(j); }
  double at(std::size_t j, std::size_t i) const { return weights_.at(j).at(i); }

 private:
  void validate() const {
    if (weights_.size() != source_.size())
      throw Error(ErrorKind::dimension_mismatch,
                  "matrix has " + std::to_string(weights_.size()) + " rows for " +
                      std::to_string(source_.size()) + " source tokens");
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      const auto &r = weights_[j];
      if (r.size() != target_.size())
        throw Error(ErrorKind::dimension_mismatch,
                    "row " + std::to_string(j) + " has " + std::to_string(r.size()) +
                        " entries for " + std::to_string(target_.size()) + " target tokens");
      double sum = 0.0;
      for (double w : r) {
        if (!std::isfinite(w) || w < 0.0 || w > 1.0)
          throw Error(ErrorKind::format_error,
                      "row " + std::to_string(j) + " has a weight outside [0, 1]");
        sum += w;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw Error(ErrorKind::format_error,
                    "row " + std::to_string(j) + " sums to " + std::to_string(sum));
    }
  }

  std::vector<std::string> source_;
  std::vector<std::string> target_;
  std::vector<std::vector<double>> weights_;
};

/// Interchange JSON: {"source_tokens": [...], "target_tokens": [...], "weights": [[...]]}.
inline AlignmentMatrix matrix_from_json(const nlohmann::json &j) {
  try {
    return AlignmentMatrix(j.at("source_tokens").get<std::vector<std::string>>(),
                           j.at("target_tokens").get<std::vector<std::string>>(),
                           j.at("weights").get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::format_error, std::string("attention matrix: ") + e.what());
  }
}

inline nlohmann::json matrix_to_json(const AlignmentMatrix &m) {
  auto weights = nlohmann::json::array();
  for (std::size_t j = 0; j < m.rows(); ++j) {
    const auto r = m.row(j);
    weights.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return nlohmann::json{
      {"source_tokens", m.source_tokens()}, {"target_tokens", m.target_tokens()}, {"weights", weights}};
}

/// (a . b) / (|a| |b|), clamped to [-1, 1].
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || a.size() != b.size())
    throw Error(ErrorKind::dimension_mismatch,
                "cosine similarity of vectors of length " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::zero_vector, "cosine similarity of a zero vector");
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

/// Indices of the k largest entries, largest first; ties go to the lower index.
inline std::vector<std::size_t> top_k_indices(std::span<const double> row, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t n = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return row[a] != row[b] ? row[a] > row[b] : a < b;
                    });
  idx.resize(n);
  return idx;
}

/// Position of index `j` in a sequence of `n` items, scaled to [0, 1].
inline double relative_position(std::size_t j, std::size_t n) {
  return n <= 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1);
}

}  // namespace stylemt

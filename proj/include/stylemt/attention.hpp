#pragma once

// Attention-head alignment: for every styled source word take the top-k
// target positions of its attention row and keep those whose embedding
// similarity to the source word is above a threshold.

#include <cstddef>
#include <set>
#include <string>

#include "stylemt/alignment.hpp"
#include "stylemt/error.hpp"
#include "stylemt/lexicon.hpp"

namespace stylemt {

/// What happens when a word is missing from the lexicon.
enum class OovPolicy {
  /// Only the rank-0 candidate of the row passes, on attention alone.
  permissive,
  /// The candidate fails the filter.
  strict,
};

struct AttentionParams {
  std::size_t k = 3;
  /// Calibrated with the sweep command; not a property of any model.
  double threshold = 0.5;
  OovPolicy oov = OovPolicy::permissive;
};

/// Result of filtering one (j, i) candidate. Exposed for auditing.
enum class CandidateVerdict { accepted, below_threshold, zero_weight, oov_rejected };

inline CandidateVerdict judge_candidate(const AlignmentMatrix &matrix, std::size_t j,
                                        std::size_t i, std::size_t rank,
                                        const EmbeddingLexicon &lexicon,
                                        const AttentionParams &params) {
  if (matrix.at(j, i) <= 0.0) return CandidateVerdict::zero_weight;
  const auto src = lexicon.lookup(matrix.source_tokens()[j]);
  const auto tgt = lexicon.lookup(matrix.target_tokens()[i]);
  if (!src || !tgt) {
    if (params.oov == OovPolicy::strict || rank != 0) return CandidateVerdict::oov_rejected;
    return CandidateVerdict::accepted;
  }
  double sim;
  try {
    sim = cosine_similarity(*src, *tgt);
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::zero_vector) throw;
    return CandidateVerdict::below_threshold;
  }
  return sim > params.threshold ? CandidateVerdict::accepted : CandidateVerdict::below_threshold;
}

inline AlignmentMap attention_align(const AlignmentMatrix &matrix,
                                    const std::set<std::size_t> &styled_source,
                                    const EmbeddingLexicon &lexicon,
                                    const AttentionParams &params = {}) {
  if (params.threshold < -1.0 || params.threshold > 1.0)
    throw Error(ErrorKind::invalid_argument, "threshold must lie in [-1, 1]");
  AlignmentMap map(matrix.rows(), matrix.cols());
  for (std::size_t j : styled_source) {
    if (j >= matrix.rows())
      throw Error(ErrorKind::invalid_argument,
                  "styled source index " + std::to_string(j) + " outside the matrix");
    const auto candidates = top_k_indices(matrix.row(j), params.k);
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
      const std::size_t i = candidates[rank];
      if (judge_candidate(matrix, j, i, rank, lexicon, params) == CandidateVerdict::accepted)
        map.add(j, i);
    }
  }
  return map;
}

}  // namespace stylemt

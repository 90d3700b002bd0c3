#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "puner/corpus.hpp"
#include "puner/linalg.hpp"

namespace puner {

/// Predicted entity span; score is the maximum token probability inside it.
struct PredSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::string etype;
  double score = 0.0;

  friend bool operator==(const PredSpan& a, const PredSpan& b) {
    return a.start == b.start && a.end == b.end && a.etype == b.etype;
  }
};

/// Per-type word probabilities for a corpus. types are kept sorted; each
/// sentence matrix is types x tokens.
struct TypedScores {
  std::vector<std::string> types;
  std::vector<Matrix> scores;  // one per sentence
  double threshold = 0.5;
};

/// Cross-type conflict resolution for one sentence: a token stays positive
/// for the type with the highest probability at or above the threshold; the
/// other types are reset to 0. Ties go to the lexicographically smallest
/// type name.
std::vector<std::vector<std::uint8_t>> resolve_conflicts(const Matrix& scores,
                                                         double threshold);

/// Maximal runs of positive labels become spans, per type.
std::vector<PredSpan> decode_spans(
    const std::vector<std::vector<std::uint8_t>>& labels, const Matrix& scores,
    const std::vector<std::string>& types);

/// resolve_conflicts + decode_spans over every sentence.
std::vector<std::vector<PredSpan>> decode_corpus(const TypedScores& scores);

}  // namespace puner

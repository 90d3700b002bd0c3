#include "puner/decoder.hpp"

#include <algorithm>

#include "puner/error.hpp"

namespace puner {

std::vector<std::vector<std::uint8_t>> resolve_conflicts(const Matrix& scores,
                                                         double threshold) {
  const std::size_t n_types = scores.rows;
  const std::size_t n_tokens = scores.cols;
  std::vector<std::vector<std::uint8_t>> labels(
      n_types, std::vector<std::uint8_t>(n_tokens, 0));
  for (std::size_t t = 0; t < n_tokens; ++t) {
    std::size_t best = n_types;
    double best_score = 0.0;
    for (std::size_t ty = 0; ty < n_types; ++ty) {
      const double s = scores.at(ty, t);
      if (s < threshold) continue;
      if (best == n_types || s > best_score) {  // ties keep the earlier type
        best = ty;
        best_score = s;
      }
    }
    if (best != n_types) labels[best][t] = 1;
  }
  return labels;
}

std::vector<PredSpan> decode_spans(
    const std::vector<std::vector<std::uint8_t>>& labels, const Matrix& scores,
    const std::vector<std::string>& types) {
  if (labels.size() != types.size()) {
    throw Error("label rows do not match type count");
  }
  std::vector<PredSpan> spans;
  for (std::size_t ty = 0; ty < types.size(); ++ty) {
    const std::vector<std::uint8_t>& row = labels[ty];
    std::size_t t = 0;
    while (t < row.size()) {
      if (!row[t]) {
        ++t;
        continue;
      }
      std::size_t start = t;
      double best = scores.at(ty, t);
      while (t + 1 < row.size() && row[t + 1]) {
        ++t;
        best = std::max(best, scores.at(ty, t));
      }
      spans.push_back(PredSpan{start, t, types[ty], best});
      ++t;
    }
  }
  std::sort(spans.begin(), spans.end(), [](const PredSpan& a, const PredSpan& b) {
    return a.start != b.start ? a.start < b.start : a.etype < b.etype;
  });
  return spans;
}

std::vector<std::vector<PredSpan>> decode_corpus(const TypedScores& scores) {
  std::vector<std::vector<PredSpan>> out;
  out.reserve(scores.scores.size());
  for (const Matrix& m : scores.scores) {
    out.push_back(decode_spans(resolve_conflicts(m, scores.threshold), m,
                               scores.types));
  }
  return out;
}

}  // namespace puner

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "puner/corpus.hpp"

namespace puner {

/// A matched token range, end inclusive.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Per-type entity dictionary: a set of multi-token entries, stored
/// case-sensitively. A case-folded index is kept alongside so matching can
/// optionally ignore ASCII case.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::string etype) : etype_(std::move(etype)) {}

  const std::string& etype() const { return etype_; }
  const std::set<std::vector<std::string>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Adds an entry; returns false if it was already present.
  bool add(std::vector<std::string> entry);

  bool contains(const std::vector<std::string>& entry, bool fold_case = false) const;

  /// Membership test over a token window [start, end] of a sentence.
  bool matches(const Sentence& s, std::size_t start, std::size_t end,
               bool fold_case) const;

  /// File format: one entry per line, tokens separated by single spaces;
  /// blank lines and lines starting with '#' are ignored.
  static Dictionary load(const std::string& path, std::string etype);
  void save(const std::string& path) const;

 private:
  std::string etype_;
  std::set<std::vector<std::string>> entries_;
  std::unordered_set<std::string> keys_exact_;
  std::unordered_set<std::string> keys_folded_;
};

std::string fold_ascii(const std::string& s);

/// Positive/unlabeled partition produced by dictionary labeling: for each
/// sentence, the sorted token indices labeled positive; everything else is
/// implicitly unlabeled.
struct PULabeling {
  std::string etype;
  std::vector<std::vector<std::size_t>> positives;

  bool is_positive(std::size_t sentence, std::size_t token) const;
  std::size_t total_positives() const;
};

/// Greedy leftmost-longest dictionary matching over one sentence. At each
/// position, window lengths k+1 down to 1 are tried (clamped to the sentence
/// end); the first hit becomes a span and scanning resumes after it.
std::vector<TokenSpan> max_match(const Sentence& sentence, const Dictionary& dict,
                                 std::size_t k, bool fold_case = false);

PULabeling label_corpus(const Corpus& corpus, const Dictionary& dict,
                        std::size_t k = 4, bool fold_case = false);

/// Word-level statistics of a labeling against gold annotations.
/// precision/recall are percentages; precision is absent when nothing was
/// labeled.
struct LabelingStats {
  std::size_t labeled_words = 0;
  std::optional<double> precision;
  double recall = 0.0;
};

LabelingStats labeling_stats(const PULabeling& labeling, const Corpus& corpus);

}  // namespace puner

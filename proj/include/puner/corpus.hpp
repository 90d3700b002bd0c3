#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace puner {

/// One pre-tokenized word. chars holds the Unicode scalar values of surface.
struct Token {
  std::string surface;
  std::vector<char32_t> chars;

  Token() = default;
  explicit Token(std::string text);  // validates and decodes
};

/// Gold annotation span; token indices, end inclusive.
struct GoldSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string etype;

  friend bool operator==(const GoldSpan&, const GoldSpan&) = default;
  friend auto operator<=>(const GoldSpan&, const GoldSpan&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::optional<std::vector<GoldSpan>> gold;
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::set<std::string> type_inventory;  // union of gold span types

  void rebuild_type_inventory();
};

enum class TagScheme { Bio, Bioes };

/// Decodes a UTF-8 string into Unicode scalar values. Throws ParseError on
/// invalid byte sequences.
std::vector<char32_t> utf8_decode(const std::string& s);

// ---------------------------------------------------------------------------
// Tag codec

/// Decodes one sentence's tag column into spans. line_numbers, when given,
/// holds the 1-based file line of each token and is used in error messages.
std::vector<GoldSpan> decode_tags(const std::vector<std::string>& tags,
                                  TagScheme scheme, bool lenient,
                                  const std::vector<std::size_t>* line_numbers = nullptr);

/// Encodes spans as one tag per token. Spans must be in bounds and pairwise
/// non-overlapping (a token can carry only one tag).
std::vector<std::string> encode_tags(std::size_t n_tokens,
                                     std::vector<GoldSpan> spans,
                                     TagScheme scheme);

// ---------------------------------------------------------------------------
// File I/O
//
// CoNLL column format: UTF-8, whitespace-separated columns, blank line
// between sentences, lines whose first column is "-DOCSTART-" are skipped.

/// Reads a corpus with gold tags. tag_column < 0 selects the last column.
Corpus read_conll(const std::string& path, int tag_column, TagScheme scheme,
                  bool lenient = false);

/// Reads tokens only (first column); sentences carry no gold annotation.
Corpus read_conll_tokens(const std::string& path);

/// Writes "token tag" lines; spans_per_sentence must align with corpus.
void write_conll(const Corpus& corpus,
                 const std::vector<std::vector<GoldSpan>>& spans_per_sentence,
                 TagScheme scheme, const std::string& path);

}  // namespace puner

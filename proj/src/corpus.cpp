#include "puner/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "puner/error.hpp"
#include "puner/io.hpp"

namespace puner {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_ascii_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_ascii_space(line[j])) ++j;
    if (j > i) cols.push_back(line.substr(i, j - i));
    i = j;
  }
  return cols;
}

std::string line_ref(const std::vector<std::size_t>* lines, std::size_t i) {
  if (lines && i < lines->size()) {
    return "line " + std::to_string((*lines)[i]);
  }
  return "token " + std::to_string(i + 1);
}

// Splits a tag like "B-PER" into its prefix char and type name.
// Returns false for "O"; throws on anything else.
bool split_tag(const std::string& tag, char* prefix, std::string* etype,
               const std::string& where) {
  if (tag == "O") return false;
  if (tag.size() < 3 || tag[1] != '-') {
    throw ParseError("malformed tag '" + tag + "' at " + where);
  }
  *prefix = tag[0];
  *etype = tag.substr(2);
  return true;
}

}  // namespace

Token::Token(std::string text) : surface(std::move(text)) {
  if (surface.empty()) throw ParseError("empty token");
  for (char c : surface) {
    if (is_ascii_space(c)) {
      throw ParseError("token contains whitespace: '" + surface + "'");
    }
  }
  chars = utf8_decode(surface);
}

void Corpus::rebuild_type_inventory() {
  type_inventory.clear();
  for (const Sentence& s : sentences) {
    if (!s.gold) continue;
    for (const GoldSpan& g : *s.gold) type_inventory.insert(g.etype);
  }
}

std::vector<char32_t> utf8_decode(const std::string& s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      throw ParseError("invalid UTF-8 lead byte in '" + s + "'");
    }
    if (i + len > s.size()) throw ParseError("truncated UTF-8 in '" + s + "'");
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        throw ParseError("invalid UTF-8 continuation in '" + s + "'");
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings and surrogates.
    static const char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMin[len]) {
      throw ParseError("overlong UTF-8 in '" + s + "'");
    }
    if (cp >= 0xD800 && cp <= 0xDFFF) {
      throw ParseError("UTF-8 surrogate in '" + s + "'");
    }
    if (cp > 0x10FFFF) throw ParseError("UTF-8 out of range in '" + s + "'");
    out.push_back(cp);
    i += len;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tag codec

std::vector<GoldSpan> decode_tags(const std::vector<std::string>& tags,
                                  TagScheme scheme, bool lenient,
                                  const std::vector<std::size_t>* line_numbers) {
  std::vector<GoldSpan> spans;
  bool open = false;
  std::size_t open_start = 0;
  std::string open_type;

  auto close = [&](std::size_t end) {
    spans.push_back(GoldSpan{open_start, end, open_type});
    open = false;
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    char prefix = 0;
    std::string etype;
    const std::string where = line_ref(line_numbers, i);
    if (!split_tag(tags[i], &prefix, &etype, where)) {
      // "O"
      if (open) {
        if (scheme == TagScheme::Bioes && !lenient) {
          throw ParseError("unterminated span before O at " + where);
        }
        close(i - 1);
      }
      continue;
    }
    if (etype.empty()) throw ParseError("empty type in tag at " + where);

    if (scheme == TagScheme::Bio) {
      switch (prefix) {
        case 'B':
          if (open) close(i - 1);
          open = true;
          open_start = i;
          open_type = etype;
          break;
        case 'I':
          if (open && open_type == etype) break;  // extend
          if (!lenient) {
            throw ParseError("I-" + etype + " without matching B- at " + where);
          }
          if (open) close(i - 1);
          open = true;
          open_start = i;
          open_type = etype;
          break;
        default:
          throw ParseError("unknown BIO prefix '" + std::string(1, prefix) +
                           "' at " + where);
      }
    } else {  // BIOES
      switch (prefix) {
        case 'B':
          if (open) {
            if (!lenient) throw ParseError("unterminated span before B- at " + where);
            close(i - 1);
          }
          open = true;
          open_start = i;
          open_type = etype;
          break;
        case 'I':
          if (open && open_type == etype) break;
          if (!lenient) {
            throw ParseError("I-" + etype + " without matching B- at " + where);
          }
          if (open) close(i - 1);
          open = true;
          open_start = i;
          open_type = etype;
          break;
        case 'E':
          if (open && open_type == etype) {
            close(i);
            break;
          }
          if (!lenient) {
            throw ParseError("E-" + etype + " without matching B- at " + where);
          }
          if (open) close(i - 1);
          spans.push_back(GoldSpan{i, i, etype});
          break;
        case 'S':
          if (open) {
            if (!lenient) throw ParseError("unterminated span before S- at " + where);
            close(i - 1);
          }
          spans.push_back(GoldSpan{i, i, etype});
          break;
        default:
          throw ParseError("unknown BIOES prefix '" + std::string(1, prefix) +
                           "' at " + where);
      }
    }
  }
  if (open) {
    if (scheme == TagScheme::Bioes && !lenient) {
      throw ParseError("unterminated span at sentence end (" +
                       line_ref(line_numbers, tags.size() - 1) + ")");
    }
    close(tags.size() - 1);
  }
  return spans;
}

std::vector<std::string> encode_tags(std::size_t n_tokens,
                                     std::vector<GoldSpan> spans,
                                     TagScheme scheme) {
  for (const GoldSpan& g : spans) {
    if (g.start > g.end || g.end >= n_tokens) {
      throw Error("span out of bounds: [" + std::to_string(g.start) + "," +
                  std::to_string(g.end) + "] in sentence of length " +
                  std::to_string(n_tokens));
    }
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start <= spans[i - 1].end) {
      throw Error("overlapping spans at token " +
                  std::to_string(spans[i].start) +
                  (spans[i].etype == spans[i - 1].etype
                       ? " (same type " + spans[i].etype + ")"
                       : ""));
    }
  }

  std::vector<std::string> tags(n_tokens, "O");
  for (const GoldSpan& g : spans) {
    if (scheme == TagScheme::Bio) {
      tags[g.start] = "B-" + g.etype;
      for (std::size_t t = g.start + 1; t <= g.end; ++t) tags[t] = "I-" + g.etype;
    } else {
      if (g.start == g.end) {
        tags[g.start] = "S-" + g.etype;
      } else {
        tags[g.start] = "B-" + g.etype;
        for (std::size_t t = g.start + 1; t < g.end; ++t) tags[t] = "I-" + g.etype;
        tags[g.end] = "E-" + g.etype;
      }
    }
  }
  return tags;
}

// ---------------------------------------------------------------------------
// File I/O

namespace {

struct RawSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::vector<std::size_t> lines;
};

Sentence finish_sentence(const RawSentence& raw, bool with_tags,
                         TagScheme scheme, bool lenient) {
  Sentence s;
  s.tokens.reserve(raw.tokens.size());
  for (const std::string& t : raw.tokens) s.tokens.emplace_back(t);
  if (with_tags) {
    s.gold = decode_tags(raw.tags, scheme, lenient, &raw.lines);
  }
  return s;
}

Corpus read_conll_impl(const std::string& path, bool with_tags, int tag_column,
                       TagScheme scheme, bool lenient) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);

  Corpus corpus;
  RawSentence raw;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (raw.tokens.empty()) return;
    corpus.sentences.push_back(finish_sentence(raw, with_tags, scheme, lenient));
    raw = RawSentence{};
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> cols = split_columns(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols[0] == "-DOCSTART-") continue;
    raw.tokens.push_back(cols[0]);
    raw.lines.push_back(line_no);
    if (with_tags) {
      std::size_t idx =
          tag_column < 0 ? cols.size() - 1 : static_cast<std::size_t>(tag_column);
      if (idx >= cols.size()) {
        throw ParseError("line " + std::to_string(line_no) + " has " +
                         std::to_string(cols.size()) +
                         " column(s), tag column " + std::to_string(idx) +
                         " missing");
      }
      raw.tags.push_back(cols[idx]);
    }
  }
  flush();
  corpus.rebuild_type_inventory();
  return corpus;
}

}  // namespace

Corpus read_conll(const std::string& path, int tag_column, TagScheme scheme,
                  bool lenient) {
  return read_conll_impl(path, /*with_tags=*/true, tag_column, scheme, lenient);
}

Corpus read_conll_tokens(const std::string& path) {
  return read_conll_impl(path, /*with_tags=*/false, 0, TagScheme::Bio, false);
}

void write_conll(const Corpus& corpus,
                 const std::vector<std::vector<GoldSpan>>& spans_per_sentence,
                 TagScheme scheme, const std::string& path) {
  if (spans_per_sentence.size() != corpus.sentences.size()) {
    throw Error("span list count " + std::to_string(spans_per_sentence.size()) +
                " does not match sentence count " +
                std::to_string(corpus.sentences.size()));
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const Sentence& s = corpus.sentences[i];
    std::vector<std::string> tags =
        encode_tags(s.tokens.size(), spans_per_sentence[i], scheme);
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      out << s.tokens[t].surface << ' ' << tags[t] << '\n';
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace puner

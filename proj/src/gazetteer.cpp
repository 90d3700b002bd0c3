#include "puner/gazetteer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "puner/error.hpp"
#include "puner/io.hpp"

namespace puner {

namespace {

// Tokens never contain whitespace, so '\n' is a collision-free joiner.
std::string join_key(const std::vector<std::string>& tokens) {
  std::string key;
  for (const std::string& t : tokens) {
    key += t;
    key += '\n';
  }
  return key;
}

std::string join_key_folded(const std::vector<std::string>& tokens) {
  std::string key;
  for (const std::string& t : tokens) {
    key += fold_ascii(t);
    key += '\n';
  }
  return key;
}

std::string window_key(const Sentence& s, std::size_t start, std::size_t end,
                       bool fold_case) {
  std::string key;
  for (std::size_t t = start; t <= end; ++t) {
    key += fold_case ? fold_ascii(s.tokens[t].surface) : s.tokens[t].surface;
    key += '\n';
  }
  return key;
}

}  // namespace

std::string fold_ascii(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool Dictionary::add(std::vector<std::string> entry) {
  if (entry.empty()) throw Error("empty dictionary entry");
  for (const std::string& t : entry) {
    if (t.empty()) throw Error("dictionary entry with empty token");
  }
  auto [it, inserted] = entries_.insert(std::move(entry));
  if (inserted) {
    keys_exact_.insert(join_key(*it));
    keys_folded_.insert(join_key_folded(*it));
  }
  return inserted;
}

bool Dictionary::contains(const std::vector<std::string>& entry,
                          bool fold_case) const {
  if (fold_case) return keys_folded_.count(join_key_folded(entry)) > 0;
  return keys_exact_.count(join_key(entry)) > 0;
}

bool Dictionary::matches(const Sentence& s, std::size_t start, std::size_t end,
                         bool fold_case) const {
  const std::string key = window_key(s, start, end, fold_case);
  return fold_case ? keys_folded_.count(key) > 0 : keys_exact_.count(key) > 0;
}

Dictionary Dictionary::load(const std::string& path, std::string etype) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dictionary: " + path);
  Dictionary dict(std::move(etype));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    dict.add(std::move(tokens));
  }
  return dict;
}

void Dictionary::save(const std::string& path) const {
  std::ostringstream out;
  for (const std::vector<std::string>& entry : entries_) {
    for (std::size_t i = 0; i < entry.size(); ++i) {
      if (i) out << ' ';
      out << entry[i];
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

bool PULabeling::is_positive(std::size_t sentence, std::size_t token) const {
  if (sentence >= positives.size()) return false;
  const std::vector<std::size_t>& p = positives[sentence];
  return std::binary_search(p.begin(), p.end(), token);
}

std::size_t PULabeling::total_positives() const {
  std::size_t n = 0;
  for (const auto& p : positives) n += p.size();
  return n;
}

std::vector<TokenSpan> max_match(const Sentence& sentence, const Dictionary& dict,
                                 std::size_t k, bool fold_case) {
  std::vector<TokenSpan> spans;
  const std::size_t n = sentence.tokens.size();
  std::size_t i = 0;
  while (i < n) {
    bool matched = false;
    for (std::size_t j = k + 1; j-- > 0;) {  // j = k .. 0
      std::size_t end = std::min(i + j, n - 1);  // clamp to sentence end
      if (dict.matches(sentence, i, end, fold_case)) {
        spans.push_back(TokenSpan{i, end});
        i = end + 1;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return spans;
}

PULabeling label_corpus(const Corpus& corpus, const Dictionary& dict,
                        std::size_t k, bool fold_case) {
  PULabeling labeling;
  labeling.etype = dict.etype();
  labeling.positives.resize(corpus.sentences.size());
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    std::vector<std::size_t>& pos = labeling.positives[s];
    for (const TokenSpan& span : max_match(corpus.sentences[s], dict, k, fold_case)) {
      for (std::size_t t = span.start; t <= span.end; ++t) pos.push_back(t);
    }
    // max_match spans are disjoint and ordered, so pos is already sorted.
  }
  return labeling;
}

LabelingStats labeling_stats(const PULabeling& labeling, const Corpus& corpus) {
  if (labeling.positives.size() != corpus.sentences.size()) {
    throw Error("labeling does not cover corpus");
  }
  bool any_gold = false;
  for (const Sentence& s : corpus.sentences) {
    if (s.gold) {
      any_gold = true;
      break;
    }
  }
  if (!any_gold) throw Error("corpus has no gold annotations");

  std::size_t labeled = 0, labeled_true = 0, gold_tokens = 0, gold_hit = 0;
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& s = corpus.sentences[si];
    std::vector<char> in_gold(s.tokens.size(), 0);
    if (s.gold) {
      for (const GoldSpan& g : *s.gold) {
        if (g.etype != labeling.etype) continue;
        for (std::size_t t = g.start; t <= g.end; ++t) in_gold[t] = 1;
      }
    }
    for (char b : in_gold) gold_tokens += b ? 1 : 0;
    for (std::size_t t : labeling.positives[si]) {
      ++labeled;
      if (in_gold[t]) {
        ++labeled_true;
        ++gold_hit;
      }
    }
  }

  LabelingStats stats;
  stats.labeled_words = labeled;
  if (labeled > 0) {
    stats.precision = 100.0 * static_cast<double>(labeled_true) /
                      static_cast<double>(labeled);
  }
  stats.recall = gold_tokens > 0 ? 100.0 * static_cast<double>(gold_hit) /
                                       static_cast<double>(gold_tokens)
                                 : 0.0;
  return stats;
}

}  // namespace puner

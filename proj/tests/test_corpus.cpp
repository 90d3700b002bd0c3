#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "puner/corpus.hpp"
#include "puner/error.hpp"
#include "puner/io.hpp"
#include "puner/rng.hpp"

using namespace puner;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

// Independent oracle: a sentence is a maximal block of non-blank,
// non-DOCSTART lines.
std::size_t count_sentences_by_line_scan(const std::string& text) {
  std::size_t count = 0;
  bool in_block = false;
  std::size_t start = 0;
  auto flush_line = [&](const std::string& line) {
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    bool doc = line.rfind("-DOCSTART-", 0) == 0;
    if (blank) {
      if (in_block) ++count;
      in_block = false;
    } else if (!doc) {
      in_block = true;
    }
  };
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      flush_line(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (in_block) ++count;
  return count;
}

}  // namespace

TEST_CASE("token validation and utf8 chars") {
  Token t("Frazier");
  CHECK(t.chars.size() == 7);
  Token accented("Ærøskøbing");
  CHECK(accented.chars.size() == 10);
  CHECK(accented.chars[0] == U'Æ');
  CHECK_THROWS_AS(Token(""), ParseError);
  CHECK_THROWS_AS(Token("two words"), ParseError);
  CHECK_THROWS_AS(Token("\xff\xfe"), ParseError);
}

TEST_CASE("bio decoding of the basic example") {
  std::vector<std::string> tags{"B-PER", "I-PER", "O"};
  auto spans = decode_tags(tags, TagScheme::Bio, false);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == GoldSpan{0, 1, "PER"});
}

TEST_CASE("all-O column decodes to empty gold") {
  std::vector<std::string> tags{"O", "O", "O"};
  CHECK(decode_tags(tags, TagScheme::Bio, false).empty());
  CHECK(decode_tags(tags, TagScheme::Bioes, false).empty());
}

TEST_CASE("bio strict rejects dangling I-, lenient starts a span") {
  std::vector<std::string> tags{"O", "I-PER", "O"};
  CHECK_THROWS_AS(decode_tags(tags, TagScheme::Bio, false), ParseError);
  auto spans = decode_tags(tags, TagScheme::Bio, true);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == GoldSpan{1, 1, "PER"});

  // error message carries the line number when provided
  std::vector<std::size_t> lines{10, 11, 12};
  try {
    decode_tags(tags, TagScheme::Bio, false, &lines);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 11") != std::string::npos);
  }
}

TEST_CASE("bioes strict is strict about chains") {
  CHECK_THROWS_AS(decode_tags({"B-PER", "O"}, TagScheme::Bioes, false), ParseError);
  CHECK_THROWS_AS(decode_tags({"I-PER"}, TagScheme::Bioes, false), ParseError);
  CHECK_THROWS_AS(decode_tags({"E-PER"}, TagScheme::Bioes, false), ParseError);
  CHECK_THROWS_AS(decode_tags({"B-PER"}, TagScheme::Bioes, false), ParseError);

  auto spans = decode_tags({"B-PER", "I-PER", "E-PER", "S-LOC"},
                           TagScheme::Bioes, false);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == GoldSpan{0, 2, "PER"});
  CHECK(spans[1] == GoldSpan{3, 3, "LOC"});
}

TEST_CASE("encode examples") {
  CHECK(encode_tags(3, {{0, 1, "PER"}}, TagScheme::Bio) ==
        std::vector<std::string>{"B-PER", "I-PER", "O"});
  CHECK(encode_tags(3, {}, TagScheme::Bio) ==
        std::vector<std::string>{"O", "O", "O"});
  CHECK(encode_tags(3, {{0, 0, "PER"}, {2, 2, "LOC"}}, TagScheme::Bioes) ==
        std::vector<std::string>{"S-PER", "O", "S-LOC"});
}

TEST_CASE("encode rejects overlap and out-of-bounds") {
  CHECK_THROWS_AS(encode_tags(3, {{0, 1, "PER"}, {1, 2, "PER"}}, TagScheme::Bio),
                  Error);
  CHECK_THROWS_AS(encode_tags(3, {{0, 1, "PER"}, {1, 2, "LOC"}}, TagScheme::Bio),
                  Error);
  CHECK_THROWS_AS(encode_tags(2, {{0, 2, "PER"}}, TagScheme::Bio), Error);
}

TEST_CASE("read_conll basics") {
  std::string path = temp_path("puner_test_basic.conll");
  write_text(path,
             "-DOCSTART- O\n"
             "\n"
             "Joe NNP B-PER\n"
             "Frazier NNP I-PER\n"
             "talks VBZ O\n"
             "\n"
             "EU NNP B-ORG\n"
             "\n");
  Corpus c = read_conll(path, -1, TagScheme::Bio);
  REQUIRE(c.sentences.size() == 2);
  CHECK(c.sentences[0].tokens.size() == 3);
  REQUIRE(c.sentences[0].gold.has_value());
  CHECK(c.sentences[0].gold->at(0) == GoldSpan{0, 1, "PER"});
  CHECK(c.type_inventory == std::set<std::string>{"PER", "ORG"});

  // explicit tag column
  Corpus c1 = read_conll(path, 2, TagScheme::Bio);
  CHECK(c1.sentences[0].gold->size() == 1);

  // tokens-only read ignores annotation columns
  Corpus c2 = read_conll_tokens(path);
  CHECK_FALSE(c2.sentences[0].gold.has_value());
}

TEST_CASE("empty file reads as empty corpus") {
  std::string path = temp_path("puner_test_empty.conll");
  write_text(path, "");
  Corpus c = read_conll(path, -1, TagScheme::Bio);
  CHECK(c.sentences.empty());
}

TEST_CASE("sentence count matches an independent line-scan oracle") {
  std::string text =
      "a O\nb O\n\nc B-X\n\n\nd O\ne O\nf O\n";
  std::string path = temp_path("puner_test_count.conll");
  write_text(path, text);
  Corpus c = read_conll(path, -1, TagScheme::Bio);
  CHECK(c.sentences.size() == 3);
  CHECK(c.sentences.size() == count_sentences_by_line_scan(text));
}

TEST_CASE("missing tag column is reported with its line") {
  std::string path = temp_path("puner_test_cols.conll");
  write_text(path, "good B-PER\nbad\n");
  try {
    read_conll(path, 1, TagScheme::Bio);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

namespace {

// Random corpus plus random well-formed span sets.
Corpus random_corpus(Rng& rng, std::vector<std::vector<GoldSpan>>* spans) {
  static const char* kWords[] = {"alpha", "beta",  "Gamma", "delta",
                                 "Eps",   "zeta7", "eta",   "THETA"};
  static const char* kTypes[] = {"PER", "LOC", "ORG"};
  Corpus c;
  std::size_t n_sent = 1 + rng.index(5);
  for (std::size_t si = 0; si < n_sent; ++si) {
    Sentence s;
    std::size_t len = 1 + rng.index(9);
    for (std::size_t t = 0; t < len; ++t) {
      s.tokens.emplace_back(kWords[rng.index(std::size(kWords))]);
    }
    std::vector<GoldSpan> ss;
    std::size_t t = 0;
    while (t < len) {
      if (rng.uniform() < 0.35) {
        std::size_t end = std::min(len - 1, t + rng.index(3));
        ss.push_back(GoldSpan{t, end, kTypes[rng.index(std::size(kTypes))]});
        t = end + 2;  // gap keeps spans disjoint
      } else {
        ++t;
      }
    }
    spans->push_back(ss);
    c.sentences.push_back(std::move(s));
  }
  return c;
}

}  // namespace

TEST_CASE("read/write round trip is the identity on tokens and spans") {
  Rng rng(2024);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::vector<GoldSpan>> spans;
    Corpus c = random_corpus(rng, &spans);
    for (TagScheme scheme : {TagScheme::Bio, TagScheme::Bioes}) {
      std::string path = temp_path("puner_test_rt.conll");
      write_conll(c, spans, scheme, path);
      Corpus back = read_conll(path, -1, scheme);
      REQUIRE(back.sentences.size() == c.sentences.size());
      for (std::size_t si = 0; si < c.sentences.size(); ++si) {
        REQUIRE(back.sentences[si].tokens.size() == c.sentences[si].tokens.size());
        for (std::size_t t = 0; t < c.sentences[si].tokens.size(); ++t) {
          CHECK(back.sentences[si].tokens[t].surface ==
                c.sentences[si].tokens[t].surface);
        }
        std::vector<GoldSpan> expect = spans[si];
        std::sort(expect.begin(), expect.end());
        std::vector<GoldSpan> got = *back.sentences[si].gold;
        std::sort(got.begin(), got.end());
        CHECK(got == expect);
      }
    }
  }
}

TEST_CASE("decode then re-encode reproduces a well-formed tag column") {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::vector<GoldSpan>> spans;
    Corpus c = random_corpus(rng, &spans);
    for (TagScheme scheme : {TagScheme::Bio, TagScheme::Bioes}) {
      for (std::size_t si = 0; si < c.sentences.size(); ++si) {
        auto tags = encode_tags(c.sentences[si].tokens.size(), spans[si], scheme);
        auto decoded = decode_tags(tags, scheme, false);
        auto again = encode_tags(c.sentences[si].tokens.size(), decoded, scheme);
        CHECK(again == tags);
      }
    }
  }
}

TEST_CASE("atomic write leaves no temp file behind") {
  std::string path = temp_path("puner_test_atomic.txt");
  write_file_atomic(path, "hello");
  CHECK(read_file(path) == "hello");
  CHECK_FALSE(file_exists(path + ".tmp"));
  std::remove(path.c_str());
}

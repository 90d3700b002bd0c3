#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "puner/corpus.hpp"
#include "puner/linalg.hpp"

namespace puner {

// ---------------------------------------------------------------------------
// Word-shape indicators. Word embeddings are looked up case-folded, so these
// carry the capitalization signal. Exactly one indicator is set; tokens whose
// shape matches none of the first four rules fall through to noinfo.

struct HandFeatures {
  enum Index { kAllCaps = 0, kUpperInitial, kLowercase, kMixedCaps, kNoinfo };
  static constexpr std::size_t kCount = 5;
  std::array<double, kCount> onehot{};

  Index active() const;
};

HandFeatures hand_features(const Token& token);

// ---------------------------------------------------------------------------
// Vocabularies. Id 0 is reserved for unknown items in both tables.

class CharVocab {
 public:
  static constexpr std::size_t kUnk = 0;

  CharVocab() { id_to_char_.push_back(0); }

  std::size_t add(char32_t c);           // returns id, inserting if new
  std::size_t lookup(char32_t c) const;  // kUnk when absent
  std::size_t size() const { return id_to_char_.size(); }
  char32_t at(std::size_t id) const { return id_to_char_[id]; }

 private:
  std::vector<char32_t> id_to_char_;
  std::unordered_map<char32_t, std::size_t> char_to_id_;
};

/// Word table; all lookups are ASCII case-folded.
class WordVocab {
 public:
  static constexpr std::size_t kUnk = 0;

  WordVocab() { id_to_word_.push_back("<unk>"); }

  std::size_t add(const std::string& surface);
  std::size_t lookup(const std::string& surface) const;
  std::size_t size() const { return id_to_word_.size(); }
  const std::string& at(std::size_t id) const { return id_to_word_[id]; }

 private:
  std::vector<std::string> id_to_word_;
  std::unordered_map<std::string, std::size_t> word_to_id_;
};

// ---------------------------------------------------------------------------
// Model parameters

struct HyperParams {
  std::size_t char_dim = 16;     // d_c
  std::size_t conv_width = 3;
  std::size_t n_filters = 16;    // F
  std::size_t word_dim = 50;     // d_w
  std::size_t hidden_dim = 64;   // d_h per direction

  std::size_t input_dim() const {
    return n_filters + word_dim + HandFeatures::kCount;
  }
};

struct LstmArrays {
  // Gate order within the stacked dimension: input, forget, cell, output.
  Matrix w_x;                // 4H x Din
  Matrix w_h;                // 4H x H
  std::vector<double> bias;  // 4H
};

struct ModelArrays {
  Matrix char_emb;                // |Vc| x d_c
  Matrix conv_kernel;             // F x (width * d_c)
  std::vector<double> conv_bias;  // F
  Matrix word_emb;                // |Vw| x d_w
  LstmArrays fwd, bwd;
  std::vector<double> scorer_w;   // 2H
  double scorer_b = 0.0;
};

struct ModelParams {
  HyperParams hp;
  CharVocab chars;
  WordVocab words;
  ModelArrays arrays;
};

/// Calls fn(name, data, count) for every parameter array, in a fixed order.
template <class Arrays, class Fn>
void visit_arrays(Arrays& a, Fn&& fn) {
  fn("char_emb", a.char_emb.a.data(), a.char_emb.a.size());
  fn("conv_kernel", a.conv_kernel.a.data(), a.conv_kernel.a.size());
  fn("conv_bias", a.conv_bias.data(), a.conv_bias.size());
  fn("word_emb", a.word_emb.a.data(), a.word_emb.a.size());
  fn("fwd.w_x", a.fwd.w_x.a.data(), a.fwd.w_x.a.size());
  fn("fwd.w_h", a.fwd.w_h.a.data(), a.fwd.w_h.a.size());
  fn("fwd.bias", a.fwd.bias.data(), a.fwd.bias.size());
  fn("bwd.w_x", a.bwd.w_x.a.data(), a.bwd.w_x.a.size());
  fn("bwd.w_h", a.bwd.w_h.a.data(), a.bwd.w_h.a.size());
  fn("bwd.bias", a.bwd.bias.data(), a.bwd.bias.size());
  fn("scorer_w", a.scorer_w.data(), a.scorer_w.size());
  fn("scorer_b", &a.scorer_b, std::size_t{1});
}

/// Zeroed gradient (or accumulator) storage shaped like the model.
ModelArrays make_arrays_like(const ModelParams& params);

/// Builds vocabularies from the corpus and initializes all arrays with
/// uniform(-r, r), r = sqrt(6 / (fan_in + fan_out)); biases start at zero.
/// embedding_path, when non-empty, points to a GloVe-style text file whose
/// vectors overwrite matching (case-folded) word rows.
ModelParams init_model(const Corpus& corpus, const HyperParams& hp,
                       std::uint64_t seed, const std::string& embedding_path = "");

// ---------------------------------------------------------------------------
// Forward / backward

/// Per-token cached activations sufficient for exact gradients.
struct TokenTrace {
  std::vector<std::size_t> char_ids;
  std::vector<std::size_t> pool_argmax;  // per filter, position in [0, m)
  std::size_t word_id = 0;
  HandFeatures hand;
  std::vector<double> input;  // e(w), length input_dim
};

struct LstmStepTrace {
  std::vector<double> gate_i, gate_f, gate_g, gate_o;
  std::vector<double> cell, hidden, tanh_cell;
};

struct ForwardTrace {
  std::vector<TokenTrace> tokens;
  std::vector<LstmStepTrace> fwd, bwd;  // both indexed by token position
  std::vector<double> scores;           // sigmoid outputs, in (0,1)
};

/// Context-independent character representation: embedded character sequence,
/// same-padded linear convolution, max pool over time per filter.
std::vector<double> char_repr(const Token& token, const ModelParams& params);

/// Full context encoding of one sentence; throws NumericError (naming the
/// step) if a non-finite value appears.
ForwardTrace encode_sentence(const Sentence& sentence, const ModelParams& params);

/// Accumulates exact gradients of sum_t dscores[t] * scores[t] into grads.
void backward_accumulate(const ForwardTrace& trace,
                         std::span<const double> dscores,
                         const ModelParams& params, ModelArrays& grads);

ModelArrays backward(const ForwardTrace& trace, std::span<const double> dscores,
                     const ModelParams& params);

// ---------------------------------------------------------------------------
// Serialization. Binary container: magic "PUNER1", then named sections
// holding either shaped little-endian f64 arrays or string tables.

void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

/// Reads a GloVe-style embedding text file (token then word_dim floats per
/// line) into rows of word_emb for words present in the vocabulary.
void load_embeddings(ModelParams& params, const std::string& path);

}  // namespace puner

#include "puner/featenc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "puner/error.hpp"
#include "puner/gazetteer.hpp"
#include "puner/io.hpp"
#include "puner/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian");

namespace puner {

namespace {

constexpr double kScoreClamp = 1e-12;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

bool is_ascii_upper(char32_t c) { return c >= U'A' && c <= U'Z'; }
bool is_ascii_lower(char32_t c) { return c >= U'a' && c <= U'z'; }
bool is_ascii_alpha(char32_t c) { return is_ascii_upper(c) || is_ascii_lower(c); }

}  // namespace

// ---------------------------------------------------------------------------
// Hand features

HandFeatures::Index HandFeatures::active() const {
  for (std::size_t i = 0; i < kCount; ++i) {
    if (onehot[i] != 0.0) return static_cast<Index>(i);
  }
  return kNoinfo;
}

HandFeatures hand_features(const Token& token) {
  std::size_t n_alpha = 0, n_upper = 0, n_lower = 0;
  for (char32_t c : token.chars) {
    if (is_ascii_alpha(c)) ++n_alpha;
    if (is_ascii_upper(c)) ++n_upper;
    if (is_ascii_lower(c)) ++n_lower;
  }
  const bool first_upper = !token.chars.empty() && is_ascii_upper(token.chars[0]);

  HandFeatures::Index idx;
  if (n_alpha >= 2 && n_upper == n_alpha) {
    idx = HandFeatures::kAllCaps;
  } else if (first_upper && n_lower == n_alpha - 1 && n_alpha >= 1) {
    idx = HandFeatures::kUpperInitial;
  } else if (n_alpha >= 1 && n_lower == n_alpha) {
    idx = HandFeatures::kLowercase;
  } else if (n_upper > 0 && n_lower > 0) {
    idx = HandFeatures::kMixedCaps;
  } else {
    idx = HandFeatures::kNoinfo;
  }
  HandFeatures h;
  h.onehot[idx] = 1.0;
  return h;
}

// ---------------------------------------------------------------------------
// Vocabularies

std::size_t CharVocab::add(char32_t c) {
  auto it = char_to_id_.find(c);
  if (it != char_to_id_.end()) return it->second;
  std::size_t id = id_to_char_.size();
  id_to_char_.push_back(c);
  char_to_id_.emplace(c, id);
  return id;
}

std::size_t CharVocab::lookup(char32_t c) const {
  auto it = char_to_id_.find(c);
  return it == char_to_id_.end() ? kUnk : it->second;
}

std::size_t WordVocab::add(const std::string& surface) {
  std::string key = fold_ascii(surface);
  auto it = word_to_id_.find(key);
  if (it != word_to_id_.end()) return it->second;
  std::size_t id = id_to_word_.size();
  word_to_id_.emplace(key, id);
  id_to_word_.push_back(std::move(key));
  return id;
}

std::size_t WordVocab::lookup(const std::string& surface) const {
  auto it = word_to_id_.find(fold_ascii(surface));
  return it == word_to_id_.end() ? kUnk : it->second;
}

// ---------------------------------------------------------------------------
// Initialization

ModelArrays make_arrays_like(const ModelParams& params) {
  const ModelArrays& a = params.arrays;
  ModelArrays g;
  g.char_emb = Matrix(a.char_emb.rows, a.char_emb.cols);
  g.conv_kernel = Matrix(a.conv_kernel.rows, a.conv_kernel.cols);
  g.conv_bias.assign(a.conv_bias.size(), 0.0);
  g.word_emb = Matrix(a.word_emb.rows, a.word_emb.cols);
  auto lstm_like = [](const LstmArrays& src) {
    LstmArrays l;
    l.w_x = Matrix(src.w_x.rows, src.w_x.cols);
    l.w_h = Matrix(src.w_h.rows, src.w_h.cols);
    l.bias.assign(src.bias.size(), 0.0);
    return l;
  };
  g.fwd = lstm_like(a.fwd);
  g.bwd = lstm_like(a.bwd);
  g.scorer_w.assign(a.scorer_w.size(), 0.0);
  g.scorer_b = 0.0;
  return g;
}

namespace {

void glorot_fill(Rng& rng, double* data, std::size_t n, std::size_t fan_in,
                 std::size_t fan_out) {
  double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < n; ++i) data[i] = rng.uniform(-r, r);
}

}  // namespace

ModelParams init_model(const Corpus& corpus, const HyperParams& hp,
                       std::uint64_t seed, const std::string& embedding_path) {
  ModelParams m;
  m.hp = hp;
  for (const Sentence& s : corpus.sentences) {
    for (const Token& t : s.tokens) {
      for (char32_t c : t.chars) m.chars.add(c);
      m.words.add(t.surface);
    }
  }

  const std::size_t H = hp.hidden_dim;
  const std::size_t din = hp.input_dim();
  ModelArrays& a = m.arrays;
  a.char_emb = Matrix(m.chars.size(), hp.char_dim);
  a.conv_kernel = Matrix(hp.n_filters, hp.conv_width * hp.char_dim);
  a.conv_bias.assign(hp.n_filters, 0.0);
  a.word_emb = Matrix(m.words.size(), hp.word_dim);
  auto init_lstm = [&](LstmArrays& l) {
    l.w_x = Matrix(4 * H, din);
    l.w_h = Matrix(4 * H, H);
    l.bias.assign(4 * H, 0.0);
  };
  init_lstm(a.fwd);
  init_lstm(a.bwd);
  a.scorer_w.assign(2 * H, 0.0);
  a.scorer_b = 0.0;

  Rng rng(seed);
  // Embedding tables are read row-wise, so fan_in is 1 there.
  glorot_fill(rng, a.char_emb.a.data(), a.char_emb.size(), 1, hp.char_dim);
  glorot_fill(rng, a.conv_kernel.a.data(), a.conv_kernel.size(),
              hp.conv_width * hp.char_dim, hp.n_filters);
  glorot_fill(rng, a.word_emb.a.data(), a.word_emb.size(), 1, hp.word_dim);
  for (LstmArrays* l : {&a.fwd, &a.bwd}) {
    glorot_fill(rng, l->w_x.a.data(), l->w_x.size(), din, 4 * H);
    glorot_fill(rng, l->w_h.a.data(), l->w_h.size(), H, 4 * H);
  }
  glorot_fill(rng, a.scorer_w.data(), a.scorer_w.size(), 2 * H, 1);

  if (!embedding_path.empty()) load_embeddings(m, embedding_path);
  return m;
}

void load_embeddings(ModelParams& params, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings: " + path);
  std::unordered_set<std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::size_t id = params.words.lookup(word);
    if (id == WordVocab::kUnk || seen.count(id)) {
      continue;  // unknown word, or already filled by an earlier line
    }
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (vec.size() != params.hp.word_dim) {
      throw ParseError("embedding line " + std::to_string(line_no) + " has " +
                       std::to_string(vec.size()) + " values, expected " +
                       std::to_string(params.hp.word_dim));
    }
    std::copy(vec.begin(), vec.end(), params.arrays.word_emb.row(id));
    seen.insert(id);
  }
}

// ---------------------------------------------------------------------------
// Forward

namespace {

// Embedded character sequence, same-padded linear convolution, max pool per
// filter; earliest position wins pooling ties. Records ids and argmaxes in
// the trace for the backward pass.
void char_forward(const Token& token, const ModelParams& params, TokenTrace& tt,
                  double* out) {
  const HyperParams& hp = params.hp;
  tt.char_ids.resize(token.chars.size());
  for (std::size_t i = 0; i < token.chars.size(); ++i) {
    tt.char_ids[i] = params.chars.lookup(token.chars[i]);
  }
  tt.pool_argmax.assign(hp.n_filters, 0);

  const std::size_t m = tt.char_ids.size();
  const std::size_t left = (hp.conv_width - 1) / 2;  // same padding
  const Matrix& emb = params.arrays.char_emb;
  const Matrix& kernel = params.arrays.conv_kernel;

  for (std::size_t f = 0; f < hp.n_filters; ++f) {
    double best = 0.0;
    std::size_t best_t = 0;
    for (std::size_t t = 0; t < m; ++t) {
      double v = params.arrays.conv_bias[f];
      for (std::size_t u = 0; u < hp.conv_width; ++u) {
        std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + u) -
                             static_cast<std::ptrdiff_t>(left);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(m)) continue;
        const double* e = emb.row(tt.char_ids[static_cast<std::size_t>(pos)]);
        const double* k = kernel.row(f) + u * hp.char_dim;
        for (std::size_t c = 0; c < hp.char_dim; ++c) v += k[c] * e[c];
      }
      if (t == 0 || v > best) {
        best = v;
        best_t = t;
      }
    }
    out[f] = best;
    tt.pool_argmax[f] = best_t;
  }
}

void lstm_forward(const LstmArrays& lp, std::size_t H,
                  const std::vector<TokenTrace>& tokens,
                  const std::vector<std::size_t>& order,
                  std::vector<LstmStepTrace>& steps) {
  const std::size_t din = lp.w_x.cols;
  std::vector<double> hprev(H, 0.0), cprev(H, 0.0), z(4 * H);

  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t t = order[k];
    const double* x = tokens[t].input.data();
    double zsum = 0.0;
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double v = lp.bias[r];
      const double* wx = lp.w_x.row(r);
      for (std::size_t c = 0; c < din; ++c) v += wx[c] * x[c];
      const double* wh = lp.w_h.row(r);
      for (std::size_t c = 0; c < H; ++c) v += wh[c] * hprev[c];
      z[r] = v;
      zsum += v;
    }
    if (!std::isfinite(zsum)) {
      throw NumericError("non-finite pre-activation at step " + std::to_string(t));
    }
    LstmStepTrace& st = steps[t];
    st.gate_i.resize(H);
    st.gate_f.resize(H);
    st.gate_g.resize(H);
    st.gate_o.resize(H);
    st.cell.resize(H);
    st.hidden.resize(H);
    st.tanh_cell.resize(H);
    double check = 0.0;
    for (std::size_t j = 0; j < H; ++j) {
      st.gate_i[j] = sigmoid(z[j]);
      st.gate_f[j] = sigmoid(z[H + j]);
      st.gate_g[j] = std::tanh(z[2 * H + j]);
      st.gate_o[j] = sigmoid(z[3 * H + j]);
      st.cell[j] = st.gate_f[j] * cprev[j] + st.gate_i[j] * st.gate_g[j];
      st.tanh_cell[j] = std::tanh(st.cell[j]);
      st.hidden[j] = st.gate_o[j] * st.tanh_cell[j];
      check += st.hidden[j];
    }
    if (!std::isfinite(check)) {
      throw NumericError("non-finite hidden state at step " + std::to_string(t));
    }
    hprev = st.hidden;
    cprev = st.cell;
  }
}

void lstm_backward(const LstmArrays& lp, std::size_t H,
                   const std::vector<TokenTrace>& tokens,
                   const std::vector<std::size_t>& order,
                   const std::vector<LstmStepTrace>& steps,
                   const std::vector<std::vector<double>>& dh_ext,
                   LstmArrays& g, std::vector<std::vector<double>>& dx) {
  const std::size_t din = lp.w_x.cols;
  std::vector<double> dh_carry(H, 0.0), dc_carry(H, 0.0);
  std::vector<double> dz(4 * H);

  for (std::size_t k = order.size(); k-- > 0;) {
    const std::size_t t = order[k];
    const LstmStepTrace& st = steps[t];
    const double* hprev = k > 0 ? steps[order[k - 1]].hidden.data() : nullptr;
    const double* cprev = k > 0 ? steps[order[k - 1]].cell.data() : nullptr;

    for (std::size_t j = 0; j < H; ++j) {
      double dh = dh_ext[t][j] + dh_carry[j];
      double dout = dh * st.tanh_cell[j];
      double dc = dc_carry[j] +
                  dh * st.gate_o[j] * (1.0 - st.tanh_cell[j] * st.tanh_cell[j]);
      double di = dc * st.gate_g[j];
      double dg = dc * st.gate_i[j];
      double df = cprev ? dc * cprev[j] : 0.0;
      dc_carry[j] = dc * st.gate_f[j];
      dz[j] = di * st.gate_i[j] * (1.0 - st.gate_i[j]);
      dz[H + j] = df * st.gate_f[j] * (1.0 - st.gate_f[j]);
      dz[2 * H + j] = dg * (1.0 - st.gate_g[j] * st.gate_g[j]);
      dz[3 * H + j] = dout * st.gate_o[j] * (1.0 - st.gate_o[j]);
    }

    const double* x = tokens[t].input.data();
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double d = dz[r];
      if (d == 0.0) continue;
      g.bias[r] += d;
      double* gwx = g.w_x.row(r);
      for (std::size_t c = 0; c < din; ++c) gwx[c] += d * x[c];
      const double* wx = lp.w_x.row(r);
      double* dxr = dx[t].data();
      for (std::size_t c = 0; c < din; ++c) dxr[c] += d * wx[c];
      if (hprev) {
        double* gwh = g.w_h.row(r);
        for (std::size_t c = 0; c < H; ++c) gwh[c] += d * hprev[c];
      }
      const double* wh = lp.w_h.row(r);
      for (std::size_t c = 0; c < H; ++c) dh_carry[c] += d * wh[c];
    }
  }
}

void char_backward(const TokenTrace& tt, const double* dcr,
                   const ModelParams& params, ModelArrays& g) {
  const HyperParams& hp = params.hp;
  const std::size_t m = tt.char_ids.size();
  const std::size_t left = (hp.conv_width - 1) / 2;
  const Matrix& emb = params.arrays.char_emb;
  const Matrix& kernel = params.arrays.conv_kernel;

  for (std::size_t f = 0; f < hp.n_filters; ++f) {
    const double d = dcr[f];
    if (d == 0.0) continue;
    g.conv_bias[f] += d;
    const std::size_t t = tt.pool_argmax[f];
    for (std::size_t u = 0; u < hp.conv_width; ++u) {
      std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + u) -
                           static_cast<std::ptrdiff_t>(left);
      if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(m)) continue;
      const std::size_t cid = tt.char_ids[static_cast<std::size_t>(pos)];
      const double* e = emb.row(cid);
      const double* k = kernel.row(f) + u * hp.char_dim;
      double* gk = g.conv_kernel.row(f) + u * hp.char_dim;
      double* ge = g.char_emb.row(cid);
      for (std::size_t c = 0; c < hp.char_dim; ++c) {
        gk[c] += d * e[c];
        ge[c] += d * k[c];
      }
    }
  }
}

std::vector<std::size_t> forward_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

std::vector<std::size_t> reverse_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = n - 1 - i;
  return order;
}

}  // namespace

std::vector<double> char_repr(const Token& token, const ModelParams& params) {
  TokenTrace scratch;
  std::vector<double> out(params.hp.n_filters);
  char_forward(token, params, scratch, out.data());
  return out;
}

ForwardTrace encode_sentence(const Sentence& sentence, const ModelParams& params) {
  const HyperParams& hp = params.hp;
  const std::size_t n = sentence.tokens.size();
  const std::size_t H = hp.hidden_dim;
  if (n == 0) throw Error("empty sentence");

  ForwardTrace trace;
  trace.tokens.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Token& tok = sentence.tokens[t];
    TokenTrace& tt = trace.tokens[t];
    tt.input.assign(hp.input_dim(), 0.0);
    char_forward(tok, params, tt, tt.input.data());
    tt.word_id = params.words.lookup(tok.surface);
    const double* wrow = params.arrays.word_emb.row(tt.word_id);
    std::copy(wrow, wrow + hp.word_dim, tt.input.data() + hp.n_filters);
    tt.hand = hand_features(tok);
    for (std::size_t i = 0; i < HandFeatures::kCount; ++i) {
      tt.input[hp.n_filters + hp.word_dim + i] = tt.hand.onehot[i];
    }
  }

  trace.fwd.resize(n);
  trace.bwd.resize(n);
  lstm_forward(params.arrays.fwd, H, trace.tokens, forward_order(n), trace.fwd);
  lstm_forward(params.arrays.bwd, H, trace.tokens, reverse_order(n), trace.bwd);

  trace.scores.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    double pre = params.arrays.scorer_b;
    for (std::size_t j = 0; j < H; ++j) {
      pre += params.arrays.scorer_w[j] * trace.fwd[t].hidden[j];
      pre += params.arrays.scorer_w[H + j] * trace.bwd[t].hidden[j];
    }
    if (!std::isfinite(pre)) {
      throw NumericError("non-finite score at step " + std::to_string(t));
    }
    trace.scores[t] = std::clamp(sigmoid(pre), kScoreClamp, 1.0 - kScoreClamp);
  }
  return trace;
}

void backward_accumulate(const ForwardTrace& trace,
                         std::span<const double> dscores,
                         const ModelParams& params, ModelArrays& grads) {
  const HyperParams& hp = params.hp;
  const std::size_t n = trace.tokens.size();
  const std::size_t H = hp.hidden_dim;
  if (dscores.size() != n) {
    throw Error("dscores length " + std::to_string(dscores.size()) +
                " does not match trace length " + std::to_string(n));
  }
  if (grads.scorer_w.size() != params.arrays.scorer_w.size() ||
      !grads.word_emb.same_shape(params.arrays.word_emb)) {
    throw Error("gradient shapes do not match parameters");
  }

  // Scorer backward: external hidden-state gradients per direction.
  std::vector<std::vector<double>> dh_fwd(n, std::vector<double>(H, 0.0));
  std::vector<std::vector<double>> dh_bwd(n, std::vector<double>(H, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    const double f = trace.scores[t];
    const double dpre = dscores[t] * f * (1.0 - f);
    if (dpre == 0.0) continue;
    for (std::size_t j = 0; j < H; ++j) {
      grads.scorer_w[j] += dpre * trace.fwd[t].hidden[j];
      grads.scorer_w[H + j] += dpre * trace.bwd[t].hidden[j];
      dh_fwd[t][j] += dpre * params.arrays.scorer_w[j];
      dh_bwd[t][j] += dpre * params.arrays.scorer_w[H + j];
    }
    grads.scorer_b += dpre;
  }

  std::vector<std::vector<double>> dx(n, std::vector<double>(hp.input_dim(), 0.0));
  lstm_backward(params.arrays.fwd, H, trace.tokens, forward_order(n), trace.fwd,
                dh_fwd, grads.fwd, dx);
  lstm_backward(params.arrays.bwd, H, trace.tokens, reverse_order(n), trace.bwd,
                dh_bwd, grads.bwd, dx);

  for (std::size_t t = 0; t < n; ++t) {
    const TokenTrace& tt = trace.tokens[t];
    char_backward(tt, dx[t].data(), params, grads);
    double* gw = grads.word_emb.row(tt.word_id);
    const double* dword = dx[t].data() + hp.n_filters;
    for (std::size_t c = 0; c < hp.word_dim; ++c) gw[c] += dword[c];
  }
}

ModelArrays backward(const ForwardTrace& trace, std::span<const double> dscores,
                     const ModelParams& params) {
  ModelArrays grads = make_arrays_like(params);
  backward_accumulate(trace, dscores, params, grads);
  return grads;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[] = "PUNER1\n";
constexpr std::size_t kMagicLen = 7;

enum SectionKind : std::uint8_t { kF64Array = 0, kStringList = 1, kU64List = 2 };

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), 8);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw ParseError("model file truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

struct Section {
  std::uint8_t kind = kF64Array;
  std::vector<std::uint64_t> dims;          // for f64 arrays
  std::vector<double> f64;                  // for f64 arrays
  std::vector<std::string> strings;         // for string lists
  std::vector<std::uint64_t> u64s;          // for u64 lists
};

void write_section(std::string& out, const std::string& name, const Section& s) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  out.push_back(static_cast<char>(s.kind));
  switch (s.kind) {
    case kF64Array: {
      put_u32(out, static_cast<std::uint32_t>(s.dims.size()));
      for (std::uint64_t d : s.dims) put_u64(out, d);
      out.append(reinterpret_cast<const char*>(s.f64.data()), s.f64.size() * 8);
      break;
    }
    case kStringList: {
      put_u64(out, s.strings.size());
      for (const std::string& str : s.strings) {
        put_u32(out, static_cast<std::uint32_t>(str.size()));
        out += str;
      }
      break;
    }
    case kU64List: {
      put_u64(out, s.u64s.size());
      for (std::uint64_t v : s.u64s) put_u64(out, v);
      break;
    }
  }
}

Section array_section(const double* data, std::vector<std::uint64_t> dims) {
  Section s;
  s.kind = kF64Array;
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) n *= d;
  s.dims = std::move(dims);
  s.f64.assign(data, data + n);
  return s;
}

const Section& find(const std::map<std::string, Section>& sections,
                    const std::string& name) {
  auto it = sections.find(name);
  if (it == sections.end()) throw ParseError("model file missing section: " + name);
  return it->second;
}

Matrix to_matrix(const Section& s, const std::string& name) {
  if (s.kind != kF64Array || s.dims.size() != 2) {
    throw ParseError("section " + name + " is not a 2-d array");
  }
  Matrix m(static_cast<std::size_t>(s.dims[0]), static_cast<std::size_t>(s.dims[1]));
  m.a = s.f64;
  return m;
}

std::vector<double> to_vector(const Section& s, const std::string& name) {
  if (s.kind != kF64Array || s.dims.size() != 1) {
    throw ParseError("section " + name + " is not a 1-d array");
  }
  return s.f64;
}


}  // namespace

void save_model(const ModelParams& params, const std::string& path) {
  const ModelArrays& a = params.arrays;
  const HyperParams& hp = params.hp;

  std::map<std::string, Section> sections;
  {
    Section s;
    s.kind = kU64List;
    s.u64s = {hp.char_dim, hp.conv_width, hp.n_filters, hp.word_dim, hp.hidden_dim};
    sections["hp"] = std::move(s);
  }
  {
    Section s;
    s.kind = kU64List;
    for (std::size_t i = 1; i < params.chars.size(); ++i) {
      s.u64s.push_back(static_cast<std::uint64_t>(params.chars.at(i)));
    }
    sections["chars"] = std::move(s);
  }
  {
    Section s;
    s.kind = kStringList;
    for (std::size_t i = 1; i < params.words.size(); ++i) {
      s.strings.push_back(params.words.at(i));
    }
    sections["words"] = std::move(s);
  }
  sections["char_emb"] =
      array_section(a.char_emb.a.data(), {a.char_emb.rows, a.char_emb.cols});
  sections["conv_kernel"] = array_section(a.conv_kernel.a.data(),
                                          {a.conv_kernel.rows, a.conv_kernel.cols});
  sections["conv_bias"] = array_section(a.conv_bias.data(), {a.conv_bias.size()});
  sections["word_emb"] =
      array_section(a.word_emb.a.data(), {a.word_emb.rows, a.word_emb.cols});
  sections["fwd.w_x"] = array_section(a.fwd.w_x.a.data(), {a.fwd.w_x.rows, a.fwd.w_x.cols});
  sections["fwd.w_h"] = array_section(a.fwd.w_h.a.data(), {a.fwd.w_h.rows, a.fwd.w_h.cols});
  sections["fwd.bias"] = array_section(a.fwd.bias.data(), {a.fwd.bias.size()});
  sections["bwd.w_x"] = array_section(a.bwd.w_x.a.data(), {a.bwd.w_x.rows, a.bwd.w_x.cols});
  sections["bwd.w_h"] = array_section(a.bwd.w_h.a.data(), {a.bwd.w_h.rows, a.bwd.w_h.cols});
  sections["bwd.bias"] = array_section(a.bwd.bias.data(), {a.bwd.bias.size()});
  sections["scorer_w"] = array_section(a.scorer_w.data(), {a.scorer_w.size()});
  sections["scorer_b"] = array_section(&a.scorer_b, {1});

  std::string out(kMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, section] : sections) {
    write_section(out, name, section);
  }
  write_file_atomic(path, out);
}

ModelParams load_model(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < kMagicLen || std::memcmp(buf.data(), kMagic, kMagicLen) != 0) {
    throw ParseError("not a PUNER1 model file: " + path);
  }
  Reader r{buf, kMagicLen};
  const std::uint32_t n_sections = r.u32();
  std::map<std::string, Section> sections;
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    Section s;
    r.need(1);
    s.kind = static_cast<std::uint8_t>(r.buf[r.pos++]);
    switch (s.kind) {
      case kF64Array: {
        const std::uint32_t ndim = r.u32();
        std::uint64_t count = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
          s.dims.push_back(r.u64());
          count *= s.dims.back();
        }
        std::string raw = r.bytes(static_cast<std::size_t>(count) * 8);
        s.f64.resize(static_cast<std::size_t>(count));
        std::memcpy(s.f64.data(), raw.data(), raw.size());
        break;
      }
      case kStringList: {
        const std::uint64_t count = r.u64();
        for (std::uint64_t k = 0; k < count; ++k) {
          const std::uint32_t len = r.u32();
          s.strings.push_back(r.bytes(len));
        }
        break;
      }
      case kU64List: {
        const std::uint64_t count = r.u64();
        for (std::uint64_t k = 0; k < count; ++k) s.u64s.push_back(r.u64());
        break;
      }
      default:
        throw ParseError("unknown section kind in model file");
    }
    sections[name] = std::move(s);
  }

  ModelParams m;
  const Section& hp = find(sections, "hp");
  if (hp.u64s.size() != 5) throw ParseError("bad hp section");
  m.hp.char_dim = static_cast<std::size_t>(hp.u64s[0]);
  m.hp.conv_width = static_cast<std::size_t>(hp.u64s[1]);
  m.hp.n_filters = static_cast<std::size_t>(hp.u64s[2]);
  m.hp.word_dim = static_cast<std::size_t>(hp.u64s[3]);
  m.hp.hidden_dim = static_cast<std::size_t>(hp.u64s[4]);

  for (std::uint64_t cp : find(sections, "chars").u64s) {
    m.chars.add(static_cast<char32_t>(cp));
  }
  for (const std::string& w : find(sections, "words").strings) {
    m.words.add(w);
  }

  ModelArrays& a = m.arrays;
  a.char_emb = to_matrix(find(sections, "char_emb"), "char_emb");
  a.conv_kernel = to_matrix(find(sections, "conv_kernel"), "conv_kernel");
  a.conv_bias = to_vector(find(sections, "conv_bias"), "conv_bias");
  a.word_emb = to_matrix(find(sections, "word_emb"), "word_emb");
  a.fwd.w_x = to_matrix(find(sections, "fwd.w_x"), "fwd.w_x");
  a.fwd.w_h = to_matrix(find(sections, "fwd.w_h"), "fwd.w_h");
  a.fwd.bias = to_vector(find(sections, "fwd.bias"), "fwd.bias");
  a.bwd.w_x = to_matrix(find(sections, "bwd.w_x"), "bwd.w_x");
  a.bwd.w_h = to_matrix(find(sections, "bwd.w_h"), "bwd.w_h");
  a.bwd.bias = to_vector(find(sections, "bwd.bias"), "bwd.bias");
  a.scorer_w = to_vector(find(sections, "scorer_w"), "scorer_w");
  a.scorer_b = to_vector(find(sections, "scorer_b"), "scorer_b").at(0);

  // Shape consistency
  const std::size_t H = m.hp.hidden_dim;
  if (a.char_emb.rows != m.chars.size() || a.char_emb.cols != m.hp.char_dim ||
      a.word_emb.rows != m.words.size() || a.word_emb.cols != m.hp.word_dim ||
      a.fwd.w_x.rows != 4 * H || a.fwd.w_x.cols != m.hp.input_dim() ||
      a.scorer_w.size() != 2 * H) {
    throw ParseError("inconsistent shapes in model file: " + path);
  }
  return m;
}

}  // namespace puner

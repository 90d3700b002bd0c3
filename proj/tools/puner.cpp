// puner -- dictionary-matching + positive-unlabeled NER pipeline.
//
// Subcommands: label, train, predict, eval, adapt, estimate-prior, synth.
// Exit codes: 0 ok, 1 runtime failure, 2 usage, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "puner/adapt.hpp"
#include "puner/corpus.hpp"
#include "puner/decoder.hpp"
#include "puner/error.hpp"
#include "puner/eval.hpp"
#include "puner/featenc.hpp"
#include "puner/gazetteer.hpp"
#include "puner/io.hpp"
#include "puner/purisk.hpp"
#include "puner/synthlab.hpp"
#include "puner/trainer.hpp"

namespace {

using namespace puner;

struct UsageError : Error {
  using Error::Error;
};

constexpr std::uint64_t kDefaultSeed = 12345;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PUNER_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return kDefaultSeed;
}

TagScheme scheme_from(const std::string& name) {
  if (name == "bio") return TagScheme::Bio;
  if (name == "bioes") return TagScheme::Bioes;
  throw UsageError("unknown scheme: " + name);
}

// TYPE=VALUE pairs from repeated flags.
std::map<std::string, std::string> parse_bindings(
    const std::vector<std::string>& raw, const std::string& flag) {
  std::map<std::string, std::string> out;
  for (const std::string& item : raw) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw UsageError(flag + " expects TYPE=VALUE, got '" + item + "'");
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::map<std::string, Dictionary> load_dictionaries(
    const std::vector<std::string>& raw) {
  auto bindings = parse_bindings(raw, "--dict");
  if (bindings.empty()) throw UsageError("at least one --dict TYPE=PATH required");
  std::map<std::string, Dictionary> dicts;
  for (const auto& [etype, path] : bindings) {
    if (!file_exists(path)) {
      throw UsageError("dictionary file not found: " + path);
    }
    dicts.emplace(etype, Dictionary::load(path, etype));
  }
  return dicts;
}

// Reads a corpus; a single-column file is treated as tokens-only unless a
// tag column was requested explicitly.
Corpus read_corpus_auto(const std::string& path, int tag_column, bool explicit_col,
                        TagScheme scheme, bool lenient, bool no_gold) {
  if (!file_exists(path)) throw UsageError("corpus file not found: " + path);
  if (no_gold) return read_conll_tokens(path);
  if (!explicit_col) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ss(line);
      std::string col;
      int count = 0;
      while (ss >> col) ++count;
      if (count == 0 || (count >= 1 && col == "-DOCSTART-")) continue;
      if (count < 2) return read_conll_tokens(path);
      break;
    }
  }
  return read_conll(path, tag_column, scheme, lenient);
}

// Matched spans of every dictionary, cross-type overlaps resolved by type
// name order (first claim wins).
std::vector<std::vector<GoldSpan>> matching_spans(
    const Corpus& corpus, const std::map<std::string, Dictionary>& dicts,
    std::size_t k, bool fold_case) {
  std::vector<std::vector<GoldSpan>> result(corpus.sentences.size());
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    std::vector<char> taken(corpus.sentences[si].tokens.size(), 0);
    for (const auto& [etype, dict] : dicts) {
      for (const TokenSpan& m : max_match(corpus.sentences[si], dict, k, fold_case)) {
        bool free = true;
        for (std::size_t t = m.start; t <= m.end; ++t) free = free && !taken[t];
        if (!free) continue;
        for (std::size_t t = m.start; t <= m.end; ++t) taken[t] = 1;
        result[si].push_back(GoldSpan{m.start, m.end, etype});
      }
    }
    std::sort(result[si].begin(), result[si].end());
  }
  return result;
}

std::string model_path(const std::string& stem, const std::string& etype) {
  return stem + "." + etype + ".puner";
}

std::map<std::string, ModelParams> load_models(const std::string& stem) {
  namespace fs = std::filesystem;
  fs::path p(stem);
  fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  std::string prefix = p.filename().string() + ".";
  std::map<std::string, ModelParams> models;
  if (!fs::exists(dir)) throw UsageError("model directory not found: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) != 0) continue;
    if (name.size() < prefix.size() + 7) continue;
    if (name.substr(name.size() - 6) != ".puner") continue;
    std::string etype = name.substr(prefix.size(), name.size() - prefix.size() - 6);
    if (etype.empty()) continue;
    models.emplace(etype, load_model(entry.path().string()));
  }
  if (models.empty()) {
    throw UsageError("no model files matching " + stem + ".<TYPE>.puner");
  }
  return models;
}

void print_labeling_stats(const std::string& etype, const PULabeling& labeling,
                          const Corpus& corpus) {
  bool any_gold = false;
  for (const Sentence& s : corpus.sentences) any_gold = any_gold || s.gold.has_value();
  if (!any_gold) {
    std::cout << "stats." << etype << " labeled_words="
              << labeling.total_positives() << " (no gold; precision/recall skipped)\n";
    return;
  }
  LabelingStats st = labeling_stats(labeling, corpus);
  std::cout << "stats." << etype << " labeled_words=" << st.labeled_words
            << " precision=";
  if (st.precision) {
    std::cout << *st.precision;
  } else {
    std::cout << "undefined";
  }
  std::cout << " recall=" << st.recall << "\n";
}

// ---------------------------------------------------------------------------
// Shared option blocks

struct CorpusOpts {
  std::string path;
  int tag_column = -1;
  bool explicit_col = false;
  std::string scheme = "bio";
  bool lenient = false;
  bool no_gold = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--corpus", path, "input corpus (CoNLL columns)")->required();
    auto* col = cmd->add_option("--tag-column", tag_column,
                                "gold tag column (default: last)");
    cmd->add_option("--scheme", scheme, "tag scheme: bio|bioes")
        ->check(CLI::IsMember({"bio", "bioes"}));
    cmd->add_flag("--lenient", lenient, "lenient tag decoding");
    cmd->add_flag("--no-gold", no_gold, "ignore any annotation columns");
    col->each([this](const std::string&) { explicit_col = true; });
  }

  Corpus read() const {
    return read_corpus_auto(path, tag_column, explicit_col, scheme_from(scheme),
                            lenient, no_gold);
  }
};

struct TrainOpts {
  std::string estimator = "wbnpu";
  std::string loss = "mae";
  std::vector<std::string> pi_raw;
  double gamma = 1.0;
  double lr = 1e-3;
  std::size_t epochs = 20;
  std::size_t batch = 16;
  std::uint64_t seed = default_seed();
  std::string optimizer = "adam";
  double clip_norm = 0.0;
  std::size_t patience = 0;

  std::size_t char_dim = 16, conv_width = 3, filters = 16, word_dim = 50,
              hidden = 64;
  std::string embeddings;

  void attach(CLI::App* cmd) {
    cmd->add_option("--estimator", estimator,
                    "supervised|upu|bupu|bnpu|wbnpu")
        ->check(CLI::IsMember({"supervised", "upu", "bupu", "bnpu", "wbnpu"}));
    cmd->add_option("--loss", loss, "mae|ce")->check(CLI::IsMember({"mae", "ce"}));
    cmd->add_option("--pi", pi_raw, "class prior per type, TYPE=VALUE");
    cmd->add_option("--gamma", gamma, "positive class weight");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch", batch, "batch size in sentences");
    cmd->add_option("--seed", seed, "random seed (env PUNER_SEED overrides default)");
    cmd->add_option("--optimizer", optimizer, "adam|sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    cmd->add_option("--clip-norm", clip_norm, "global gradient norm clip (0 = off)");
    cmd->add_option("--patience", patience,
                    "early-stop patience on training risk (0 = off)");
    cmd->add_option("--char-dim", char_dim, "char embedding size");
    cmd->add_option("--conv-width", conv_width, "char conv kernel width");
    cmd->add_option("--filters", filters, "char conv filters");
    cmd->add_option("--word-dim", word_dim, "word embedding size");
    cmd->add_option("--hidden", hidden, "recurrent hidden size per direction");
    cmd->add_option("--embeddings", embeddings, "GloVe-format embedding file");
  }

  TrainConfig config(const std::string& etype) const {
    TrainConfig cfg;
    cfg.estimator = estimator_from_string(estimator);
    cfg.loss = loss_from_string(loss);
    auto pis = parse_bindings(pi_raw, "--pi");
    auto it = pis.find(etype);
    cfg.pi_p = it != pis.end() ? std::stod(it->second) : initial_prior(etype);
    cfg.gamma = gamma;
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.optimizer = optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
    if (clip_norm > 0.0) cfg.clip_norm = clip_norm;
    if (patience > 0) cfg.patience = patience;
    return cfg;
  }

  HyperParams hp() const {
    HyperParams h;
    h.char_dim = char_dim;
    h.conv_width = conv_width;
    h.n_filters = filters;
    h.word_dim = word_dim;
    h.hidden_dim = hidden;
    return h;
  }
};

// ---------------------------------------------------------------------------
// Subcommands

int cmd_label(const CorpusOpts& corpus_opts, const std::vector<std::string>& dict_raw,
              std::size_t k, bool fold_case, const std::string& out,
              const std::string& out_scheme) {
  Corpus corpus = corpus_opts.read();
  auto dicts = load_dictionaries(dict_raw);
  auto spans = matching_spans(corpus, dicts, k, fold_case);
  write_conll(corpus, spans, scheme_from(out_scheme), out);
  for (const auto& [etype, dict] : dicts) {
    PULabeling labeling = label_corpus(corpus, dict, k, fold_case);
    print_labeling_stats(etype, labeling, corpus);
  }
  std::cout << "wrote " << out << "\n";
  std::cout << "status=ok\n";
  return 0;
}

int cmd_train(const CorpusOpts& corpus_opts, const std::vector<std::string>& dict_raw,
              const TrainOpts& train_opts, std::size_t k, bool fold_case,
              const std::string& out_stem, const std::string& report_csv_stem) {
  Corpus corpus = corpus_opts.read();
  auto dicts = load_dictionaries(dict_raw);
  for (const auto& [etype, dict] : dicts) {
    PULabeling labeling = label_corpus(corpus, dict, k, fold_case);
    TrainConfig cfg = train_opts.config(etype);
    std::cout << "train." << etype << " estimator=" << to_string(cfg.estimator)
              << " loss=" << to_string(cfg.loss) << " pi=" << cfg.pi_p
              << " gamma=" << cfg.gamma << " positives="
              << labeling.total_positives() << "\n";
    ModelParams init =
        init_model(corpus, train_opts.hp(), cfg.seed, train_opts.embeddings);
    TrainResult result = train(corpus, labeling, cfg, std::move(init));
    write_report_kv(result.report, std::cout);
    if (!report_csv_stem.empty()) {
      write_report_csv(result.report, report_csv_stem + "." + etype + ".csv");
    }
    save_model(result.params, model_path(out_stem, etype));
    std::cout << "saved " << model_path(out_stem, etype) << "\n";
  }
  std::cout << "status=ok\n";
  return 0;
}

int cmd_predict(const CorpusOpts& corpus_opts, const std::string& model_stem,
                double theta, const std::string& out_conll,
                const std::string& out_spans, const std::string& out_scheme) {
  Corpus corpus = corpus_opts.read();
  auto models = load_models(model_stem);

  TypedScores scored;
  for (const auto& [etype, _] : models) scored.types.push_back(etype);
  scored.threshold = theta;
  scored.scores.reserve(corpus.sentences.size());
  for (const Sentence& sent : corpus.sentences) {
    Matrix m(scored.types.size(), sent.tokens.size());
    std::size_t row = 0;
    for (const auto& [etype, model] : models) {
      ForwardTrace tr = encode_sentence(sent, model);
      for (std::size_t t = 0; t < tr.scores.size(); ++t) m.at(row, t) = tr.scores[t];
      ++row;
    }
    scored.scores.push_back(std::move(m));
  }
  std::vector<std::vector<PredSpan>> pred = decode_corpus(scored);

  if (!out_conll.empty()) {
    std::vector<std::vector<GoldSpan>> as_gold(pred.size());
    for (std::size_t si = 0; si < pred.size(); ++si) {
      for (const PredSpan& p : pred[si]) {
        as_gold[si].push_back(GoldSpan{p.start, p.end, p.etype});
      }
    }
    write_conll(corpus, as_gold, scheme_from(out_scheme), out_conll);
    std::cout << "wrote " << out_conll << "\n";
  }
  if (!out_spans.empty()) {
    std::ostringstream lines;
    for (std::size_t si = 0; si < pred.size(); ++si) {
      for (const PredSpan& p : pred[si]) {
        nlohmann::json j{{"sentence_index", si},
                         {"start", p.start},
                         {"end", p.end},
                         {"type", p.etype},
                         {"score", p.score}};
        lines << j.dump() << "\n";
      }
    }
    write_file_atomic(out_spans, lines.str());
    std::cout << "wrote " << out_spans << "\n";
  }
  std::size_t total = 0;
  for (const auto& v : pred) total += v.size();
  std::cout << "predicted_spans=" << total << "\n";
  std::cout << "status=ok\n";
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path,
             const std::string& scheme, bool lenient, bool macro,
             const std::string& json_out, int tag_column) {
  if (!file_exists(gold_path)) throw UsageError("gold file not found: " + gold_path);
  if (!file_exists(pred_path)) throw UsageError("pred file not found: " + pred_path);
  Corpus gold = read_conll(gold_path, tag_column, scheme_from(scheme), lenient);
  Corpus pred_corpus = read_conll(pred_path, -1, scheme_from(scheme), lenient);
  if (pred_corpus.sentences.size() != gold.sentences.size()) {
    throw Error("gold and prediction differ in sentence count");
  }
  std::vector<std::vector<PredSpan>> pred(pred_corpus.sentences.size());
  for (std::size_t si = 0; si < pred_corpus.sentences.size(); ++si) {
    if (!pred_corpus.sentences[si].gold) continue;
    for (const GoldSpan& g : *pred_corpus.sentences[si].gold) {
      pred[si].push_back(PredSpan{g.start, g.end, g.etype, 1.0});
    }
  }
  F1Report report = entity_f1(gold, pred);
  print_f1_table(report, std::cout, macro);
  if (!json_out.empty()) {
    write_file_atomic(json_out, f1_report_json(report));
    std::cout << "wrote " << json_out << "\n";
  }
  std::cout << "status=ok\n";
  return 0;
}

int cmd_adapt(const CorpusOpts& corpus_opts, const std::vector<std::string>& dict_raw,
              const TrainOpts& train_opts, std::size_t k, bool fold_case,
              std::size_t k_occ, std::size_t max_iter, double theta,
              bool reestimate_each, bool warm_start, const std::string& out_stem) {
  Corpus corpus = corpus_opts.read();
  auto dicts = load_dictionaries(dict_raw);
  for (const auto& [etype, dict] : dicts) {
    AdaptConfig cfg;
    cfg.k_occ = k_occ;
    cfg.max_iterations = max_iter;
    cfg.train = train_opts.config(etype);
    cfg.model_hp = train_opts.hp();
    cfg.embedding_path = train_opts.embeddings;
    cfg.threshold = theta;
    cfg.context_size = k;
    cfg.fold_case = fold_case;
    cfg.reestimate_prior_each_iter = reestimate_each;
    cfg.warm_start = warm_start;

    AdaptResult result = adapt_dictionary(corpus, dict, cfg);
    std::vector<std::pair<std::vector<std::string>, std::size_t>> added;
    for (std::size_t i = 0; i < result.report.iterations.size(); ++i) {
      const AdaptIteration& it = result.report.iterations[i];
      std::cout << "adapt." << etype << " iter=" << i
                << " dict_size=" << it.dict_size << " added=" << it.added()
                << " pi=" << it.pi_p_used << " risk=" << it.final_risk << "\n";
      for (const auto& entry : it.added_entries) added.emplace_back(entry, i);
    }
    save_enriched_dictionary(result.dict, added, out_stem + "." + etype + ".dict");
    save_model(result.params, model_path(out_stem, etype));
    std::cout << "saved " << out_stem << "." << etype << ".dict and "
              << model_path(out_stem, etype) << "\n";
  }
  std::cout << "status=ok\n";
  return 0;
}

int cmd_estimate_prior(const CorpusOpts& corpus_opts, const std::string& model_stem,
                       double theta) {
  Corpus corpus = corpus_opts.read();
  auto models = load_models(model_stem);
  std::vector<std::pair<std::string, const ModelParams*>> refs;
  for (const auto& [etype, model] : models) refs.emplace_back(etype, &model);
  auto estimates = estimate_prior(corpus, refs, theta);
  for (const auto& [etype, est] : estimates) {
    std::cout << "type=" << etype << " pi_init=" << initial_prior(etype)
              << " pi_raw=" << est.raw << " pi_hat=" << est.clamped
              << " degenerate=" << (est.degenerate ? 1 : 0) << "\n";
  }
  std::cout << "status=ok\n";
  return 0;
}

struct SynthOpts {
  std::string experiment;
  std::size_t dim = 2;
  double mu = 1.0, sigma = 1.0, pi = 0.5;
  std::size_t n_p = 500, n_u = 2000, resamples = 1000;
  std::uint64_t seed = default_seed();
  std::string scorer_w = "1,0";
  double scorer_b = 0.0;
  std::size_t ref_points = 4000000;
  std::string sizes = "125:500,500:2000,2000:8000";
  std::size_t steps = 500;
  double lr = 0.5;
  std::size_t hidden = 16;
  std::string estimator = "upu";
  std::string loss = "ce";
  std::string csv;
  // gen-ner
  std::size_t sentences = 2000;
  std::size_t surfaces = 60;
  double coverage = 0.3;
  std::string out, dict_out;
};

SynthConfig synth_config(const SynthOpts& o) {
  SynthConfig cfg;
  cfg.dim = o.dim;
  cfg.mu = o.mu;
  cfg.sigma = o.sigma;
  cfg.pi_p = o.pi;
  cfg.n_p = o.n_p;
  cfg.n_u = o.n_u;
  cfg.resamples = o.resamples;
  cfg.seed = o.seed;
  return cfg;
}

LinearScorer parse_scorer(const SynthOpts& o) {
  LinearScorer s;
  s.b = o.scorer_b;
  std::istringstream ss(o.scorer_w);
  std::string item;
  while (std::getline(ss, item, ',')) s.w.push_back(std::stod(item));
  if (s.w.size() != o.dim) {
    throw UsageError("--scorer-w needs " + std::to_string(o.dim) + " values");
  }
  return s;
}

int cmd_synth(const SynthOpts& o) {
  if (o.experiment == "unbiasedness") {
    SynthConfig cfg = synth_config(o);
    LinearScorer scorer = parse_scorer(o);
    UnbiasednessResult r =
        unbiasedness_experiment(cfg, scorer, loss_from_string(o.loss), o.ref_points);
    if (!o.csv.empty()) {
      std::ostringstream out;
      out << "resample,estimate\n";
      for (std::size_t i = 0; i < r.estimates.size(); ++i) {
        out << i << ',' << r.estimates[i] << "\n";
      }
      write_file_atomic(o.csv, out.str());
    }
    std::cout << "mean_estimate=" << r.mean_estimate << "\n"
              << "true_risk=" << r.true_risk << "\n"
              << "std_error=" << r.std_error << "\n"
              << "z=" << r.z << "\n"
              << "exact_match=" << (r.exact_match ? 1 : 0) << "\n";
  } else if (o.experiment == "consistency") {
    SynthConfig cfg = synth_config(o);
    LinearScorer scorer = parse_scorer(o);
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    std::istringstream ss(o.sizes);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw UsageError("--sizes expects NP:NU pairs");
      sizes.emplace_back(std::stoull(item.substr(0, colon)),
                         std::stoull(item.substr(colon + 1)));
    }
    auto rows = consistency_experiment(cfg, scorer, loss_from_string(o.loss), sizes);
    std::ostringstream csv;
    csv << "n_p,n_u,mean,std\n";
    for (const ConsistencyRow& row : rows) {
      std::cout << "n_p=" << row.n_p << " n_u=" << row.n_u
                << " mean=" << row.mean << " std=" << row.std_dev << "\n";
      csv << row.n_p << ',' << row.n_u << ',' << row.mean << ',' << row.std_dev
          << "\n";
    }
    if (!o.csv.empty()) write_file_atomic(o.csv, csv.str());
  } else if (o.experiment == "divergence") {
    SynthConfig cfg = synth_config(o);
    DivergenceResult r =
        divergence_experiment(cfg, estimator_from_string(o.estimator),
                              loss_from_string(o.loss), o.steps, o.lr, o.hidden);
    if (!o.csv.empty()) {
      std::ostringstream out;
      out << "step,risk\n";
      for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
        out << i << ',' << r.trajectory[i] << "\n";
      }
      write_file_atomic(o.csv, out.str());
    }
    std::cout << "steps=" << r.trajectory.size() << "\n"
              << "final_risk=" << r.trajectory.back() << "\n"
              << "min_risk=" << r.min_risk << "\n";
  } else if (o.experiment == "gen-ner") {
    if (o.out.empty()) throw UsageError("gen-ner requires --out");
    NerGenConfig cfg;
    cfg.sentences = o.sentences;
    cfg.entity_surfaces = o.surfaces;
    cfg.seed = o.seed;
    NerGenResult r = generate_ner_corpus(cfg);
    std::vector<std::vector<GoldSpan>> gold(r.corpus.sentences.size());
    for (std::size_t si = 0; si < r.corpus.sentences.size(); ++si) {
      gold[si] = *r.corpus.sentences[si].gold;
    }
    write_conll(r.corpus, gold, TagScheme::Bio, o.out);
    std::cout << "wrote " << o.out << " (" << r.corpus.sentences.size()
              << " sentences)\n";
    if (!o.dict_out.empty()) {
      Dictionary dict =
          dictionary_from_surfaces(r.surfaces, o.coverage, "PER", o.seed);
      dict.save(o.dict_out);
      std::cout << "wrote " << o.dict_out << " (" << dict.size() << "/"
                << r.surfaces.size() << " surfaces)\n";
    }
  } else {
    throw UsageError("unknown experiment: " + o.experiment);
  }
  std::cout << "status=ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dictionary + positive-unlabeled NER pipeline"};
  app.require_subcommand(1);

  // label
  auto* label = app.add_subcommand("label", "dictionary maximum matching");
  label->set_config("--config", "", "key=value config file; flags take precedence");
  CorpusOpts label_corpus_opts;
  label_corpus_opts.attach(label);
  std::vector<std::string> label_dicts;
  std::size_t label_k = 4;
  bool label_fold = false;
  std::string label_out, label_scheme = "bio";
  label->add_option("--dict", label_dicts, "dictionary binding TYPE=PATH");
  label->add_option("--k", label_k, "max-match context size");
  label->add_flag("--fold-case", label_fold, "case-insensitive matching");
  label->add_option("--out", label_out, "output CoNLL file")->required();
  label->add_option("--out-scheme", label_scheme, "bio|bioes")
      ->check(CLI::IsMember({"bio", "bioes"}));

  // train
  auto* train_cmd = app.add_subcommand("train", "train one PU classifier per type");
  train_cmd->set_config("--config", "", "key=value config file; flags take precedence");
  CorpusOpts train_corpus_opts;
  train_corpus_opts.attach(train_cmd);
  TrainOpts train_opts;
  train_opts.attach(train_cmd);
  std::vector<std::string> train_dicts;
  std::size_t train_k = 4;
  bool train_fold = false;
  std::string train_out, train_csv;
  train_cmd->add_option("--dict", train_dicts, "dictionary binding TYPE=PATH");
  train_cmd->add_option("--k", train_k, "max-match context size");
  train_cmd->add_flag("--fold-case", train_fold, "case-insensitive matching");
  train_cmd->add_option("--out", train_out, "model stem; writes <stem>.<TYPE>.puner")
      ->required();
  train_cmd->add_option("--report-csv", train_csv,
                        "write per-epoch CSV as <stem>.<TYPE>.csv");

  // predict
  auto* predict = app.add_subcommand("predict", "decode typed entity spans");
  predict->set_config("--config", "", "key=value config file; flags take precedence");
  CorpusOpts predict_corpus_opts;
  predict_corpus_opts.attach(predict);
  std::string predict_model, predict_conll, predict_spans, predict_scheme = "bio";
  double predict_theta = 0.5;
  predict->add_option("--model", predict_model, "model stem")->required();
  predict->add_option("--theta", predict_theta, "decision threshold");
  predict->add_option("--out-conll", predict_conll, "predictions as CoNLL");
  predict->add_option("--out-spans", predict_spans, "predictions as JSON lines");
  predict->add_option("--out-scheme", predict_scheme, "bio|bioes")
      ->check(CLI::IsMember({"bio", "bioes"}));

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "entity-level exact-match F1");
  eval_cmd->set_config("--config", "", "key=value config file; flags take precedence");
  std::string eval_gold, eval_pred, eval_scheme = "bio", eval_json;
  bool eval_lenient = false, eval_macro = false;
  int eval_col = -1;
  eval_cmd->add_option("--gold", eval_gold, "gold CoNLL file")->required();
  eval_cmd->add_option("--pred", eval_pred, "prediction CoNLL file")->required();
  eval_cmd->add_option("--scheme", eval_scheme, "bio|bioes")
      ->check(CLI::IsMember({"bio", "bioes"}));
  eval_cmd->add_flag("--lenient", eval_lenient, "lenient tag decoding");
  eval_cmd->add_flag("--macro", eval_macro, "also print macro averages");
  eval_cmd->add_option("--json", eval_json, "write report JSON here");
  eval_cmd->add_option("--tag-column", eval_col, "gold tag column (default: last)");

  // adapt
  auto* adapt_cmd = app.add_subcommand("adapt", "iterative dictionary enrichment");
  adapt_cmd->set_config("--config", "", "key=value config file; flags take precedence");
  CorpusOpts adapt_corpus_opts;
  adapt_corpus_opts.attach(adapt_cmd);
  TrainOpts adapt_train_opts;
  adapt_train_opts.attach(adapt_cmd);
  std::vector<std::string> adapt_dicts;
  std::size_t adapt_k = 4, adapt_k_occ = 2, adapt_max_iter = 5;
  bool adapt_fold = false, adapt_reest = false;
  double adapt_theta = 0.5;
  std::string adapt_out;
  adapt_cmd->add_option("--dict", adapt_dicts, "dictionary binding TYPE=PATH");
  adapt_cmd->add_option("--k", adapt_k, "max-match context size");
  adapt_cmd->add_flag("--fold-case", adapt_fold, "case-insensitive matching");
  adapt_cmd->add_option("--k-occ", adapt_k_occ,
                        "occurrence threshold (added if > k-occ)");
  adapt_cmd->add_option("--max-iter", adapt_max_iter, "max adaptation iterations");
  adapt_cmd->add_option("--theta", adapt_theta, "decision threshold");
  adapt_cmd->add_flag("--reestimate-each-iter", adapt_reest,
                      "re-estimate the prior every iteration");
  bool adapt_warm = false;
  adapt_cmd->add_flag("--warm-start", adapt_warm,
                      "keep training the same model across iterations");
  adapt_cmd->add_option("--out", adapt_out,
                        "output stem; writes <stem>.<TYPE>.dict and .puner")
      ->required();

  // estimate-prior
  auto* prior = app.add_subcommand("estimate-prior", "estimate class priors");
  prior->set_config("--config", "", "key=value config file; flags take precedence");
  CorpusOpts prior_corpus_opts;
  prior_corpus_opts.attach(prior);
  std::string prior_model;
  double prior_theta = 0.5;
  prior->add_option("--model", prior_model, "model stem")->required();
  prior->add_option("--theta", prior_theta, "decision threshold");

  // synth
  auto* synth = app.add_subcommand("synth", "synthetic estimator experiments");
  synth->set_config("--config", "", "key=value config file; flags take precedence");
  SynthOpts synth_opts;
  synth->add_option("--experiment", synth_opts.experiment,
                    "unbiasedness|consistency|divergence|gen-ner")
      ->required();
  synth->add_option("--dim", synth_opts.dim, "feature dimension");
  synth->add_option("--mu", synth_opts.mu, "class mean offset");
  synth->add_option("--sigma", synth_opts.sigma, "shared stddev");
  synth->add_option("--pi", synth_opts.pi, "true class prior");
  synth->add_option("--np", synth_opts.n_p, "positive sample size");
  synth->add_option("--nu", synth_opts.n_u, "unlabeled sample size");
  synth->add_option("--resamples", synth_opts.resamples, "number of resamples");
  synth->add_option("--seed", synth_opts.seed, "random seed");
  synth->add_option("--scorer-w", synth_opts.scorer_w, "linear scorer weights");
  synth->add_option("--scorer-b", synth_opts.scorer_b, "linear scorer bias");
  synth->add_option("--ref-points", synth_opts.ref_points,
                    "reference Monte-Carlo sample size");
  synth->add_option("--sizes", synth_opts.sizes, "NP:NU pairs for consistency");
  synth->add_option("--steps", synth_opts.steps, "divergence training steps");
  synth->add_option("--lr", synth_opts.lr, "divergence learning rate");
  synth->add_option("--hidden", synth_opts.hidden, "divergence hidden units");
  synth->add_option("--estimator", synth_opts.estimator, "divergence estimator");
  synth->add_option("--loss", synth_opts.loss, "loss for the experiment");
  synth->add_option("--csv", synth_opts.csv, "write per-resample CSV here");
  synth->add_option("--sentences", synth_opts.sentences, "gen-ner sentence count");
  synth->add_option("--surfaces", synth_opts.surfaces, "gen-ner entity surfaces");
  synth->add_option("--coverage", synth_opts.coverage,
                    "gen-ner dictionary coverage fraction");
  synth->add_option("--out", synth_opts.out, "gen-ner corpus output");
  synth->add_option("--dict-out", synth_opts.dict_out, "gen-ner dictionary output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*label) {
      return cmd_label(label_corpus_opts, label_dicts, label_k, label_fold,
                       label_out, label_scheme);
    }
    if (*train_cmd) {
      return cmd_train(train_corpus_opts, train_dicts, train_opts, train_k,
                       train_fold, train_out, train_csv);
    }
    if (*predict) {
      return cmd_predict(predict_corpus_opts, predict_model, predict_theta,
                         predict_conll, predict_spans, predict_scheme);
    }
    if (*eval_cmd) {
      return cmd_eval(eval_gold, eval_pred, eval_scheme, eval_lenient, eval_macro,
                      eval_json, eval_col);
    }
    if (*adapt_cmd) {
      return cmd_adapt(adapt_corpus_opts, adapt_dicts, adapt_train_opts, adapt_k,
                       adapt_fold, adapt_k_occ, adapt_max_iter, adapt_theta,
                       adapt_reest, adapt_warm, adapt_out);
    }
    if (*prior) {
      return cmd_estimate_prior(prior_corpus_opts, prior_model, prior_theta);
    }
    if (*synth) {
      return cmd_synth(synth_opts);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

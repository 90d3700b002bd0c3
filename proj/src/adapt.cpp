#include "puner/adapt.hpp"

#include <algorithm>
#include <sstream>

#include "puner/error.hpp"
#include "puner/io.hpp"
#include "puner/rng.hpp"

namespace puner {

namespace {

constexpr double kPriorFloor = 1e-4;
constexpr double kPriorCap = 0.5;

std::vector<std::string> fold_entry(const std::vector<std::string>& entry) {
  std::vector<std::string> out;
  out.reserve(entry.size());
  for (const std::string& t : entry) out.push_back(fold_ascii(t));
  return out;
}

// Predicted single-type spans for every sentence under a plain threshold.
std::vector<std::vector<PredSpan>> predict_single_type(
    const Corpus& corpus, const ModelParams& params, const std::string& etype,
    double threshold) {
  std::vector<std::vector<PredSpan>> out(corpus.sentences.size());
  const std::vector<std::string> types{etype};
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    ForwardTrace tr = encode_sentence(corpus.sentences[si], params);
    Matrix m(1, tr.scores.size());
    for (std::size_t t = 0; t < tr.scores.size(); ++t) m.at(0, t) = tr.scores[t];
    out[si] = decode_spans(resolve_conflicts(m, threshold), m, types);
  }
  return out;
}

}  // namespace

double initial_prior(const std::string& etype) {
  if (etype == "PER") return 0.04;
  if (etype == "LOC") return 0.04;
  if (etype == "ORG") return 0.05;
  if (etype == "MISC") return 0.03;
  return 0.04;
}

void AdaptConfig::validate() const {
  if (k_occ < 1) throw Error("k_occ must be >= 1");
  if (max_iterations < 1) throw Error("max_iterations must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error("threshold must lie in (0,1)");
  }
  train.validate();
}

std::set<std::vector<std::string>> enrichment_candidates(
    const Corpus& corpus, const std::vector<std::vector<PredSpan>>& pred,
    std::size_t k_occ, bool fold_case) {
  if (pred.size() != corpus.sentences.size()) {
    throw Error("predictions do not cover corpus");
  }

  // Positive-token masks; a surface occurrence counts as covered when all of
  // its tokens are predicted positive.
  std::vector<std::vector<char>> positive(corpus.sentences.size());
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    positive[si].assign(corpus.sentences[si].tokens.size(), 0);
    for (const PredSpan& p : pred[si]) {
      for (std::size_t t = p.start; t <= p.end; ++t) positive[si][t] = 1;
    }
  }

  std::set<std::vector<std::string>> surfaces;
  for (std::size_t si = 0; si < pred.size(); ++si) {
    for (const PredSpan& p : pred[si]) {
      std::vector<std::string> surface;
      for (std::size_t t = p.start; t <= p.end; ++t) {
        surface.push_back(corpus.sentences[si].tokens[t].surface);
      }
      surfaces.insert(std::move(surface));
    }
  }

  std::set<std::vector<std::string>> accepted;
  for (const std::vector<std::string>& surface : surfaces) {
    const std::vector<std::string> key =
        fold_case ? fold_entry(surface) : surface;
    std::size_t occurrences = 0;
    bool all_covered = true;
    for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
      const Sentence& s = corpus.sentences[si];
      if (s.tokens.size() < key.size()) continue;
      for (std::size_t start = 0; start + key.size() <= s.tokens.size(); ++start) {
        bool match = true;
        for (std::size_t j = 0; j < key.size(); ++j) {
          const std::string& tok = s.tokens[start + j].surface;
          if ((fold_case ? fold_ascii(tok) : tok) != key[j]) {
            match = false;
            break;
          }
        }
        if (!match) continue;
        ++occurrences;
        for (std::size_t j = 0; j < key.size(); ++j) {
          if (!positive[si][start + j]) {
            all_covered = false;
            break;
          }
        }
        if (!all_covered) break;
      }
      if (!all_covered) break;
    }
    if (all_covered && occurrences > k_occ) accepted.insert(surface);
  }
  return accepted;
}

AdaptResult adapt_dictionary(const Corpus& corpus, const Dictionary& dict,
                             const AdaptConfig& config) {
  config.validate();

  AdaptResult result{dict, {}, {}};
  double pi_p = config.train.pi_p;
  bool prior_estimated = false;
  bool any_gold = false;
  for (const Sentence& s : corpus.sentences) {
    if (s.gold) {
      any_gold = true;
      break;
    }
  }

  ModelParams model = init_model(corpus, config.model_hp, config.train.seed,
                                 config.embedding_path);

  for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
    PULabeling labeling =
        label_corpus(corpus, result.dict, config.context_size, config.fold_case);

    TrainConfig cfg = config.train;
    cfg.pi_p = pi_p;
    cfg.seed = Rng::derive(config.train.seed, iter);
    if (!config.warm_start && iter > 0) {
      model = init_model(corpus, config.model_hp, cfg.seed, config.embedding_path);
    }
    TrainResult trained = train(corpus, labeling, cfg, std::move(model));
    model = std::move(trained.params);
    result.params = model;

    std::vector<std::vector<PredSpan>> pred = predict_single_type(
        corpus, result.params, result.dict.etype(), config.threshold);

    if (config.reestimate_prior_each_iter || !prior_estimated) {
      std::size_t positive_tokens = 0, total_tokens = 0;
      for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
        total_tokens += corpus.sentences[si].tokens.size();
        for (const PredSpan& p : pred[si]) positive_tokens += p.end - p.start + 1;
      }
      PriorEstimate est = prior_from_counts(positive_tokens, total_tokens);
      // a degenerate estimate (model predicts nothing) is not adopted
      if (!est.degenerate) {
        pi_p = est.clamped;
        prior_estimated = true;
      }
    }

    std::set<std::vector<std::string>> candidates =
        enrichment_candidates(corpus, pred, config.k_occ, config.fold_case);
    AdaptIteration it;
    for (const std::vector<std::string>& entry : candidates) {
      if (result.dict.add(entry)) it.added_entries.push_back(entry);
    }
    it.dict_size = result.dict.size();
    it.pi_p_used = cfg.pi_p;
    it.final_risk = trained.report.epochs.empty()
                        ? 0.0
                        : trained.report.epochs.back().combined;
    if (any_gold) it.labeling = labeling_stats(labeling, corpus);
    const bool grew = !it.added_entries.empty();
    result.report.iterations.push_back(std::move(it));

    if (!grew) break;
  }
  return result;
}

void save_enriched_dictionary(
    const Dictionary& dict,
    const std::vector<std::pair<std::vector<std::string>, std::size_t>>& added,
    const std::string& path) {
  std::map<std::vector<std::string>, std::size_t> added_at;
  for (const auto& [entry, iter] : added) added_at[entry] = iter;

  std::ostringstream out;
  for (const std::vector<std::string>& entry : dict.entries()) {
    auto it = added_at.find(entry);
    if (it != added_at.end()) {
      out << "# added iter=" << it->second << "\n";
    }
    for (std::size_t i = 0; i < entry.size(); ++i) {
      if (i) out << ' ';
      out << entry[i];
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

PriorEstimate prior_from_counts(std::size_t positive_tokens,
                                std::size_t total_tokens) {
  if (total_tokens == 0) throw Error("empty corpus");
  PriorEstimate est;
  est.raw = static_cast<double>(positive_tokens) / static_cast<double>(total_tokens);
  est.degenerate = est.raw < kPriorFloor;
  est.clamped = std::clamp(est.raw, kPriorFloor, kPriorCap);
  return est;
}

std::map<std::string, PriorEstimate> estimate_prior(
    const Corpus& corpus,
    const std::vector<std::pair<std::string, const ModelParams*>>& models,
    double threshold) {
  if (corpus.sentences.empty()) throw Error("empty corpus");
  if (models.empty()) throw Error("no models given");

  std::vector<std::string> types;
  for (const auto& [etype, _] : models) types.push_back(etype);
  std::vector<std::size_t> order(types.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return types[a] < types[b];
  });

  std::vector<std::string> sorted_types;
  for (std::size_t i : order) sorted_types.push_back(types[i]);

  std::map<std::string, std::size_t> positive_tokens;
  std::size_t total_tokens = 0;
  for (const Sentence& sent : corpus.sentences) {
    total_tokens += sent.tokens.size();
    Matrix m(sorted_types.size(), sent.tokens.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      ForwardTrace tr = encode_sentence(sent, *models[order[r]].second);
      for (std::size_t t = 0; t < tr.scores.size(); ++t) m.at(r, t) = tr.scores[t];
    }
    auto labels = resolve_conflicts(m, threshold);
    for (std::size_t r = 0; r < sorted_types.size(); ++r) {
      for (std::uint8_t b : labels[r]) positive_tokens[sorted_types[r]] += b;
    }
  }

  std::map<std::string, PriorEstimate> out;
  for (const std::string& etype : sorted_types) {
    out[etype] = prior_from_counts(positive_tokens[etype], total_tokens);
  }
  return out;
}

}  // namespace puner

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "puner/corpus.hpp"
#include "puner/gazetteer.hpp"
#include "puner/purisk.hpp"

namespace puner {

// ---------------------------------------------------------------------------
// Gaussian two-class toy world: class P is N(mu * e1, sigma^2 I), class N is
// N(-mu * e1, sigma^2 I), mixed with weight pi_p.

struct SynthConfig {
  std::size_t dim = 2;
  double mu = 1.0;
  double sigma = 1.0;
  double pi_p = 0.5;
  std::size_t n_p = 500;
  std::size_t n_u = 2000;
  std::size_t resamples = 1000;
  std::uint64_t seed = 12345;

  void validate() const;
};

struct PuSample {
  std::vector<std::vector<double>> positives;
  std::vector<std::vector<double>> unlabeled;
  std::vector<int> unlabeled_labels;  // true generating class, for oracles
};

PuSample sample_pu(const SynthConfig& config);
PuSample sample_pu(const SynthConfig& config, std::uint64_t seed);

/// Any fixed scoring function into (0,1).
using Scorer = std::function<double(std::span<const double>)>;

/// sigmoid(w . x + b)
struct LinearScorer {
  std::vector<double> w;
  double b = 0.0;

  double operator()(std::span<const double> x) const;
};

// ---------------------------------------------------------------------------
// Estimator experiments

struct UnbiasednessResult {
  double mean_estimate = 0.0;
  double true_risk = 0.0;
  double std_error = 0.0;  // sample std over resamples / sqrt(M)
  double z = 0.0;          // NaN when variance is zero
  bool exact_match = false;
  std::vector<double> estimates;  // one uPU estimate per resample
};

/// Resamples PU data M times under a frozen scorer; the reference risk is a
/// Monte-Carlo mean over reference_points fully labeled draws.
UnbiasednessResult unbiasedness_experiment(const SynthConfig& config,
                                           const Scorer& scorer, LossKind kind,
                                           std::size_t reference_points = 4000000);

struct ConsistencyRow {
  std::size_t n_p = 0;
  std::size_t n_u = 0;
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Empirical standard deviation of the uPU estimate at increasing sample
/// sizes (config.resamples resamples each).
std::vector<ConsistencyRow> consistency_experiment(
    const SynthConfig& config, const Scorer& scorer, LossKind kind,
    const std::vector<std::pair<std::size_t, std::size_t>>& sizes);

/// Checks the expected sqrt(n) shrinkage between consecutive rows: each
/// ratio std[i+1]/std[i] must stay within slack of the ideal factor.
bool consistency_trend_holds(const std::vector<ConsistencyRow>& rows,
                             double ideal_ratio, double slack);

// ---------------------------------------------------------------------------
// Divergence experiment: a small trainable scorer driven by the chosen
// estimator. With an unbounded loss the uPU objective can be pushed far
// below zero; with MAE + bnPU it stays non-negative at every step.

class ToyMlp {
 public:
  ToyMlp(std::size_t dim, std::size_t hidden, std::uint64_t seed);

  double score(std::span<const double> x) const;

  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }

  /// One full-batch gradient step on the given estimator; returns the risk
  /// before the update.
  double train_step(const PuSample& sample, EstimatorKind estimator,
                    LossKind kind, double pi_p, double gamma, double lr);

 private:
  std::size_t dim_, hidden_;
  std::vector<double> w1_;  // hidden x dim
  std::vector<double> b1_;
  std::vector<double> w2_;  // hidden
  double b2_ = 0.0;
};

struct DivergenceResult {
  std::vector<double> trajectory;  // risk per step, before each update
  double min_risk = 0.0;
};

DivergenceResult divergence_experiment(const SynthConfig& config,
                                       EstimatorKind estimator, LossKind kind,
                                       std::size_t steps, double lr,
                                       std::size_t hidden = 16);

// ---------------------------------------------------------------------------
// Synthetic NER corpus with a planted entity vocabulary. Entity tokens are
// capitalized pseudo-words; common words are lowercase; a few trigger words
// tend to precede entities so context carries signal too.

struct NerGenConfig {
  std::size_t sentences = 2000;
  std::size_t common_words = 120;
  std::size_t trigger_words = 8;
  std::size_t entity_surfaces = 60;
  std::size_t min_sentence_len = 6;
  std::size_t max_sentence_len = 12;
  double entity_prob = 0.12;   // per-slot chance of planting an entity
  double trigger_prob = 0.7;   // chance an entity is preceded by a trigger
  double two_token_prob = 0.35;  // chance an entity surface has two tokens
  std::string etype = "PER";
  std::uint64_t seed = 7;
};

struct NerGenResult {
  Corpus corpus;  // with gold spans
  std::vector<std::vector<std::string>> surfaces;  // the entity vocabulary
};

NerGenResult generate_ner_corpus(const NerGenConfig& config);

/// Dictionary holding the first fraction of surfaces after a seeded shuffle.
Dictionary dictionary_from_surfaces(
    const std::vector<std::vector<std::string>>& surfaces, double fraction,
    const std::string& etype, std::uint64_t seed);

}  // namespace puner

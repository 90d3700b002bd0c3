#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "puner/decoder.hpp"
#include "puner/gazetteer.hpp"
#include "puner/trainer.hpp"

namespace puner {

/// Stock initial class priors for the standard CoNLL types; other types
/// fall back to 0.04.
double initial_prior(const std::string& etype);

struct AdaptConfig {
  std::size_t k_occ = 2;          // an entry must occur strictly more often
  std::size_t max_iterations = 5;
  TrainConfig train;
  HyperParams model_hp;
  std::string embedding_path;
  double threshold = 0.5;
  std::size_t context_size = 4;   // max-match window parameter
  bool fold_case = false;
  bool reestimate_prior_each_iter = false;  // default: once, after iteration 1
  bool warm_start = false;  // continue training the same model across
                            // iterations instead of re-initializing

  void validate() const;
};

struct AdaptIteration {
  std::size_t dict_size = 0;   // after this iteration's additions
  std::vector<std::vector<std::string>> added_entries;
  double pi_p_used = 0.0;
  double final_risk = 0.0;     // last epoch's training risk
  std::optional<LabelingStats> labeling;  // only when the corpus carries gold

  std::size_t added() const { return added_entries.size(); }
};

struct AdaptReport {
  std::vector<AdaptIteration> iterations;
};

struct AdaptResult {
  Dictionary dict;
  ModelParams params;
  AdaptReport report;
};

/// Token sequences that qualify for dictionary enrichment: each distinct
/// predicted-span surface that occurs strictly more than k_occ times in the
/// corpus with every occurrence fully covered by predicted positives of this
/// type. Occurrences are exact token-subsequence matches (case folded when
/// fold_case), overlapping ones included.
std::set<std::vector<std::string>> enrichment_candidates(
    const Corpus& corpus, const std::vector<std::vector<PredSpan>>& pred,
    std::size_t k_occ, bool fold_case = false);

/// Iterative dictionary enrichment: label, train, predict, add consistently
/// predicted surfaces; stops when an iteration adds nothing or after
/// max_iterations. The returned params are the last trained model.
AdaptResult adapt_dictionary(const Corpus& corpus, const Dictionary& dict,
                             const AdaptConfig& config);

/// Writes the enriched dictionary with per-iteration provenance comments.
void save_enriched_dictionary(
    const Dictionary& dict,
    const std::vector<std::pair<std::vector<std::string>, std::size_t>>& added,
    const std::string& path);

struct PriorEstimate {
  double raw = 0.0;      // predicted-positive tokens / total tokens
  double clamped = 0.0;  // raw clamped into [1e-4, 0.5]
  bool degenerate = false;
};

/// Fraction of tokens predicted positive per type after conflict resolution.
std::map<std::string, PriorEstimate> estimate_prior(
    const Corpus& corpus,
    const std::vector<std::pair<std::string, const ModelParams*>>& models,
    double threshold);

PriorEstimate prior_from_counts(std::size_t positive_tokens,
                                std::size_t total_tokens);

}  // namespace puner

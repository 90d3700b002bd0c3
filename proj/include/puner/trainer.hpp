#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "puner/featenc.hpp"
#include "puner/gazetteer.hpp"
#include "puner/purisk.hpp"

namespace puner {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  EstimatorKind estimator = EstimatorKind::WeightedBnpu;
  LossKind loss = LossKind::Mae;
  double pi_p = 0.04;
  double gamma = 1.0;
  double learning_rate = 1e-3;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;  // sentences
  std::uint64_t seed = 12345;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamConfig adam;
  std::optional<double> clip_norm;
  std::optional<std::size_t> patience;  // stop after this many epochs without
                                        // training-risk improvement

  void validate() const;
};

struct EpochStats {
  double combined = 0.0;
  double r_p_plus = 0.0;
  double r_p_minus = 0.0;
  double r_u_minus = 0.0;
  double clip_rate = 0.0;  // fraction of batches where the max(0,.) bound
  double wall_seconds = 0.0;

  // wall_seconds is measured, not derived from the seed; equality covers the
  // deterministic trajectory only.
  bool same_trajectory(const EpochStats& o) const {
    return combined == o.combined && r_p_plus == o.r_p_plus &&
           r_p_minus == o.r_p_minus && r_u_minus == o.r_u_minus &&
           clip_rate == o.clip_rate;
  }
};

struct TrainReport {
  std::vector<EpochStats> epochs;

  bool same_trajectory(const TrainReport& o) const;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// The sentence visitation order for one epoch; a permutation of [0, n).
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch,
                                     std::size_t n);

/// Minibatch risk minimization of one PU classifier. Deterministic given
/// config.seed. Throws NumericError if a bounded estimator produces a
/// non-finite batch risk; CE-based divergence below zero is reported, not an
/// error.
TrainResult train(const Corpus& corpus, const PULabeling& labeling,
                  const TrainConfig& config, ModelParams params);

/// Risk of the full dataset under the configured estimator.
RiskBreakdown evaluate_risk(const Corpus& corpus, const PULabeling& labeling,
                            const ModelParams& params, const TrainConfig& config);

/// Line-oriented key=value records, one line per epoch.
void write_report_kv(const TrainReport& report, std::ostream& out);

/// CSV: epoch,risk,r_p_plus,r_p_minus,r_u_minus,clip_rate
void write_report_csv(const TrainReport& report, const std::string& path);

}  // namespace puner

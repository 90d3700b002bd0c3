#pragma once

#include <span>
#include <string>
#include <vector>

namespace puner {

enum class LossKind { Mae, CrossEntropy };
enum class EstimatorKind { Supervised, Upu, Bupu, Bnpu, WeightedBnpu };

std::string to_string(LossKind kind);
std::string to_string(EstimatorKind kind);
LossKind loss_from_string(const std::string& name);
EstimatorKind estimator_from_string(const std::string& name);

/// True for estimators that require a bounded loss (MAE).
bool requires_bounded_loss(EstimatorKind kind);

/// Per-word loss. MAE is |y - f|; cross entropy is -ln f / -ln(1-f), with f
/// clamped to [1e-7, 1-1e-7] before evaluation.
double loss_value(LossKind kind, double f, int y);

/// d loss / d f, evaluated consistently with loss_value (subgradient 0 at
/// the MAE kink, clamped argument for cross entropy).
double loss_derivative(LossKind kind, double f, int y);

/// Empirical risk components. For bounded losses every mean lies in [0, M];
/// combined depends on the estimator and can be negative for uPU.
struct RiskBreakdown {
  double r_p_plus = 0.0;   // mean loss of positives against label 1
  double r_p_minus = 0.0;  // mean loss of positives against label 0
  double r_u_minus = 0.0;  // mean loss of unlabeled against label 0
  double combined = 0.0;
  bool clipped = false;    // non-negative clamp was active
};

/// Class prior and positive-class weight used during training.
struct PriorConfig {
  double pi_p = 0.04;
  double gamma = 1.0;

  void validate() const;  // 0 < pi_p < 1, gamma > 0
};

/// mean_i loss(scores[i], labels[i]).
double supervised_risk(std::span<const double> scores,
                       std::span<const int> labels, LossKind kind);

/// Unbiased PU estimate:
///   mean_u l(f,0) + pi_p * (mean_p l(f,1) - mean_p l(f,0)).
RiskBreakdown upu_risk(std::span<const double> scores_p,
                       std::span<const double> scores_u, double pi_p,
                       LossKind kind);

/// Non-negative variant:
///   pi_p * mean_p l(f,1) + max(0, mean_u l(f,0) - pi_p * mean_p l(f,0)).
RiskBreakdown bnpu_risk(std::span<const double> scores_p,
                        std::span<const double> scores_u, double pi_p,
                        LossKind kind);

/// Class-weighted training loss (bounded loss required):
///   gamma * pi_p * R_p+ + max(0, R_u- - pi_p * (1 - R_p+)).
RiskBreakdown weighted_training_risk(std::span<const double> scores_p,
                                     std::span<const double> scores_u,
                                     double pi_p, double gamma,
                                     LossKind kind = LossKind::Mae);

/// Exact (sub)derivatives of the chosen estimator with respect to each score.
/// When the non-negative clamp binds, the clipped term contributes zero.
struct RiskGradient {
  std::vector<double> wrt_p;
  std::vector<double> wrt_u;
};

RiskGradient risk_gradient(EstimatorKind estimator,
                           std::span<const double> scores_p,
                           std::span<const double> scores_u, double pi_p,
                           double gamma, LossKind kind);

/// Dispatch on estimator kind. Supervised treats positives as label 1 and
/// unlabeled as label 0 (the naive distant-supervision baseline).
RiskBreakdown estimate_risk(EstimatorKind estimator,
                            std::span<const double> scores_p,
                            std::span<const double> scores_u, double pi_p,
                            double gamma, LossKind kind);

}  // namespace puner

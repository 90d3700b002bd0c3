#include "puner/purisk.hpp"

#include <algorithm>
#include <cmath>

#include "puner/error.hpp"

namespace puner {

namespace {

constexpr double kCeEps = 1e-7;

double clamp_ce(double f) { return std::clamp(f, kCeEps, 1.0 - kCeEps); }

double mean_loss(std::span<const double> scores, int y, LossKind kind) {
  double sum = 0.0;
  for (double f : scores) sum += loss_value(kind, f, y);
  return sum / static_cast<double>(scores.size());
}

void require_nonempty(std::span<const double> scores_p,
                      std::span<const double> scores_u) {
  if (scores_p.empty()) throw Error("empty positive score list");
  if (scores_u.empty()) throw Error("empty unlabeled score list");
}

void require_pi(double pi_p) {
  if (!(pi_p >= 0.0) || !(pi_p <= 1.0)) {
    throw Error("pi_p out of range: " + std::to_string(pi_p));
  }
}

}  // namespace

std::string to_string(LossKind kind) {
  return kind == LossKind::Mae ? "mae" : "ce";
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Supervised: return "supervised";
    case EstimatorKind::Upu: return "upu";
    case EstimatorKind::Bupu: return "bupu";
    case EstimatorKind::Bnpu: return "bnpu";
    case EstimatorKind::WeightedBnpu: return "wbnpu";
  }
  return "?";
}

LossKind loss_from_string(const std::string& name) {
  if (name == "mae") return LossKind::Mae;
  if (name == "ce") return LossKind::CrossEntropy;
  throw Error("unknown loss: " + name);
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "supervised") return EstimatorKind::Supervised;
  if (name == "upu") return EstimatorKind::Upu;
  if (name == "bupu") return EstimatorKind::Bupu;
  if (name == "bnpu") return EstimatorKind::Bnpu;
  if (name == "wbnpu") return EstimatorKind::WeightedBnpu;
  throw Error("unknown estimator: " + name);
}

bool requires_bounded_loss(EstimatorKind kind) {
  return kind == EstimatorKind::Bupu || kind == EstimatorKind::Bnpu ||
         kind == EstimatorKind::WeightedBnpu;
}

double loss_value(LossKind kind, double f, int y) {
  if (kind == LossKind::Mae) return std::fabs(static_cast<double>(y) - f);
  double c = clamp_ce(f);
  return y == 1 ? -std::log(c) : -std::log(1.0 - c);
}

double loss_derivative(LossKind kind, double f, int y) {
  if (kind == LossKind::Mae) {
    double target = static_cast<double>(y);
    if (f > target) return 1.0;
    if (f < target) return -1.0;
    return 0.0;  // subgradient at the kink
  }
  double c = clamp_ce(f);
  return y == 1 ? -1.0 / c : 1.0 / (1.0 - c);
}

void PriorConfig::validate() const {
  if (!(pi_p > 0.0 && pi_p < 1.0)) {
    throw Error("pi_p must lie in (0,1), got " + std::to_string(pi_p));
  }
  if (!(gamma > 0.0)) {
    throw Error("gamma must be positive, got " + std::to_string(gamma));
  }
}

double supervised_risk(std::span<const double> scores,
                       std::span<const int> labels, LossKind kind) {
  if (scores.size() != labels.size()) {
    throw Error("scores/labels length mismatch: " +
                std::to_string(scores.size()) + " vs " +
                std::to_string(labels.size()));
  }
  if (scores.empty()) throw Error("empty score list");
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum += loss_value(kind, scores[i], labels[i]);
  }
  return sum / static_cast<double>(scores.size());
}

RiskBreakdown upu_risk(std::span<const double> scores_p,
                       std::span<const double> scores_u, double pi_p,
                       LossKind kind) {
  require_nonempty(scores_p, scores_u);
  require_pi(pi_p);
  RiskBreakdown r;
  r.r_p_plus = mean_loss(scores_p, 1, kind);
  r.r_p_minus = mean_loss(scores_p, 0, kind);
  r.r_u_minus = mean_loss(scores_u, 0, kind);
  r.combined = r.r_u_minus + pi_p * (r.r_p_plus - r.r_p_minus);
  return r;
}

RiskBreakdown bnpu_risk(std::span<const double> scores_p,
                        std::span<const double> scores_u, double pi_p,
                        LossKind kind) {
  require_nonempty(scores_p, scores_u);
  require_pi(pi_p);
  RiskBreakdown r;
  r.r_p_plus = mean_loss(scores_p, 1, kind);
  r.r_p_minus = mean_loss(scores_p, 0, kind);
  r.r_u_minus = mean_loss(scores_u, 0, kind);
  double inner = r.r_u_minus - pi_p * r.r_p_minus;
  r.clipped = inner < 0.0;
  r.combined = pi_p * r.r_p_plus + std::max(0.0, inner);
  return r;
}

RiskBreakdown weighted_training_risk(std::span<const double> scores_p,
                                     std::span<const double> scores_u,
                                     double pi_p, double gamma, LossKind kind) {
  if (kind != LossKind::Mae) {
    throw Error("weighted training risk requires a bounded loss (mae)");
  }
  if (!(gamma > 0.0)) {
    throw Error("gamma must be positive, got " + std::to_string(gamma));
  }
  require_nonempty(scores_p, scores_u);
  require_pi(pi_p);
  RiskBreakdown r;
  r.r_p_plus = mean_loss(scores_p, 1, kind);
  r.r_p_minus = 1.0 - r.r_p_plus;  // MAE identity
  r.r_u_minus = mean_loss(scores_u, 0, kind);
  double inner = r.r_u_minus - pi_p * r.r_p_minus;
  r.clipped = inner < 0.0;
  r.combined = gamma * pi_p * r.r_p_plus + std::max(0.0, inner);
  return r;
}

RiskGradient risk_gradient(EstimatorKind estimator,
                           std::span<const double> scores_p,
                           std::span<const double> scores_u, double pi_p,
                           double gamma, LossKind kind) {
  RiskGradient g;
  g.wrt_p.assign(scores_p.size(), 0.0);
  g.wrt_u.assign(scores_u.size(), 0.0);
  const double np = static_cast<double>(scores_p.size());
  const double nu = static_cast<double>(scores_u.size());

  switch (estimator) {
    case EstimatorKind::Supervised: {
      // positives labeled 1, unlabeled labeled 0, single mean over both
      if (scores_p.empty() && scores_u.empty()) throw Error("empty score lists");
      double n = np + nu;
      for (std::size_t i = 0; i < scores_p.size(); ++i) {
        g.wrt_p[i] = loss_derivative(kind, scores_p[i], 1) / n;
      }
      for (std::size_t i = 0; i < scores_u.size(); ++i) {
        g.wrt_u[i] = loss_derivative(kind, scores_u[i], 0) / n;
      }
      return g;
    }
    case EstimatorKind::Upu:
    case EstimatorKind::Bupu: {
      if (estimator == EstimatorKind::Bupu && kind != LossKind::Mae) {
        throw Error("bupu requires a bounded loss (mae)");
      }
      require_nonempty(scores_p, scores_u);
      require_pi(pi_p);
      for (std::size_t i = 0; i < scores_p.size(); ++i) {
        g.wrt_p[i] = pi_p / np * (loss_derivative(kind, scores_p[i], 1) -
                                  loss_derivative(kind, scores_p[i], 0));
      }
      for (std::size_t i = 0; i < scores_u.size(); ++i) {
        g.wrt_u[i] = loss_derivative(kind, scores_u[i], 0) / nu;
      }
      return g;
    }
    case EstimatorKind::Bnpu: {
      RiskBreakdown r = bnpu_risk(scores_p, scores_u, pi_p, kind);
      for (std::size_t i = 0; i < scores_p.size(); ++i) {
        g.wrt_p[i] = pi_p / np * loss_derivative(kind, scores_p[i], 1);
        if (!r.clipped) {
          g.wrt_p[i] -= pi_p / np * loss_derivative(kind, scores_p[i], 0);
        }
      }
      if (!r.clipped) {
        for (std::size_t i = 0; i < scores_u.size(); ++i) {
          g.wrt_u[i] = loss_derivative(kind, scores_u[i], 0) / nu;
        }
      }
      return g;
    }
    case EstimatorKind::WeightedBnpu: {
      RiskBreakdown r = weighted_training_risk(scores_p, scores_u, pi_p, gamma, kind);
      // d R_p- / d f = -d R_p+ / d f under the MAE identity
      for (std::size_t i = 0; i < scores_p.size(); ++i) {
        double dp = loss_derivative(kind, scores_p[i], 1) / np;
        g.wrt_p[i] = gamma * pi_p * dp + (r.clipped ? 0.0 : pi_p * dp);
      }
      if (!r.clipped) {
        for (std::size_t i = 0; i < scores_u.size(); ++i) {
          g.wrt_u[i] = loss_derivative(kind, scores_u[i], 0) / nu;
        }
      }
      return g;
    }
  }
  throw Error("unreachable estimator kind");
}

RiskBreakdown estimate_risk(EstimatorKind estimator,
                            std::span<const double> scores_p,
                            std::span<const double> scores_u, double pi_p,
                            double gamma, LossKind kind) {
  switch (estimator) {
    case EstimatorKind::Supervised: {
      if (scores_p.empty() && scores_u.empty()) throw Error("empty score lists");
      RiskBreakdown r;
      if (!scores_p.empty()) {
        r.r_p_plus = mean_loss(scores_p, 1, kind);
        r.r_p_minus = mean_loss(scores_p, 0, kind);
      }
      if (!scores_u.empty()) r.r_u_minus = mean_loss(scores_u, 0, kind);
      double sum = 0.0;
      for (double f : scores_p) sum += loss_value(kind, f, 1);
      for (double f : scores_u) sum += loss_value(kind, f, 0);
      r.combined = sum / static_cast<double>(scores_p.size() + scores_u.size());
      return r;
    }
    case EstimatorKind::Upu:
      return upu_risk(scores_p, scores_u, pi_p, kind);
    case EstimatorKind::Bupu:
      if (kind != LossKind::Mae) {
        throw Error("bupu requires a bounded loss (mae)");
      }
      return upu_risk(scores_p, scores_u, pi_p, kind);
    case EstimatorKind::Bnpu:
      return bnpu_risk(scores_p, scores_u, pi_p, kind);
    case EstimatorKind::WeightedBnpu:
      return weighted_training_risk(scores_p, scores_u, pi_p, gamma, kind);
  }
  throw Error("unreachable estimator kind");
}

}  // namespace puner

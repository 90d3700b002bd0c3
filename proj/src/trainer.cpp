#include "puner/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "puner/error.hpp"
#include "puner/io.hpp"
#include "puner/rng.hpp"

namespace puner {

namespace {

double mean_loss_or_zero(const std::vector<double>& scores, int y, LossKind kind) {
  if (scores.empty()) return 0.0;
  double sum = 0.0;
  for (double f : scores) sum += loss_value(kind, f, y);
  return sum / static_cast<double>(scores.size());
}

// Batch-level risk. Minibatches can lack positives (or, in degenerate
// labelings, unlabeled words); the missing side's terms drop out instead of
// erroring, which keeps the per-batch objective defined everywhere.
struct BatchRisk {
  RiskBreakdown breakdown;
  RiskGradient gradient;
};

BatchRisk batch_risk(EstimatorKind estimator, const std::vector<double>& p,
                     const std::vector<double>& u, double pi_p, double gamma,
                     LossKind kind) {
  BatchRisk out;
  if (!p.empty() && !u.empty()) {
    out.breakdown = estimate_risk(estimator, p, u, pi_p, gamma, kind);
    out.gradient = risk_gradient(estimator, p, u, pi_p, gamma, kind);
    return out;
  }

  out.gradient.wrt_p.assign(p.size(), 0.0);
  out.gradient.wrt_u.assign(u.size(), 0.0);
  RiskBreakdown& r = out.breakdown;
  r.r_p_plus = mean_loss_or_zero(p, 1, kind);
  r.r_p_minus = mean_loss_or_zero(p, 0, kind);
  r.r_u_minus = mean_loss_or_zero(u, 0, kind);
  const double np = static_cast<double>(p.size());
  const double nu = static_cast<double>(u.size());

  switch (estimator) {
    case EstimatorKind::Supervised: {
      double n = np + nu;
      r.combined = (r.r_p_plus * np + r.r_u_minus * nu) / n;
      for (std::size_t i = 0; i < p.size(); ++i) {
        out.gradient.wrt_p[i] = loss_derivative(kind, p[i], 1) / n;
      }
      for (std::size_t i = 0; i < u.size(); ++i) {
        out.gradient.wrt_u[i] = loss_derivative(kind, u[i], 0) / n;
      }
      break;
    }
    case EstimatorKind::Upu:
    case EstimatorKind::Bupu: {
      if (p.empty()) {
        r.combined = r.r_u_minus;
        for (std::size_t i = 0; i < u.size(); ++i) {
          out.gradient.wrt_u[i] = loss_derivative(kind, u[i], 0) / nu;
        }
      } else {
        r.combined = pi_p * (r.r_p_plus - r.r_p_minus);
        for (std::size_t i = 0; i < p.size(); ++i) {
          out.gradient.wrt_p[i] = pi_p / np * (loss_derivative(kind, p[i], 1) -
                                               loss_derivative(kind, p[i], 0));
        }
      }
      break;
    }
    case EstimatorKind::Bnpu:
    case EstimatorKind::WeightedBnpu: {
      const double g = estimator == EstimatorKind::WeightedBnpu ? gamma : 1.0;
      if (p.empty()) {
        // inner term is just r_u_minus >= 0, never clips
        r.combined = r.r_u_minus;
        for (std::size_t i = 0; i < u.size(); ++i) {
          out.gradient.wrt_u[i] = loss_derivative(kind, u[i], 0) / nu;
        }
      } else {
        double p_minus = estimator == EstimatorKind::WeightedBnpu
                             ? 1.0 - r.r_p_plus
                             : r.r_p_minus;
        double inner = -pi_p * p_minus;
        r.clipped = inner < 0.0;
        r.combined = g * pi_p * r.r_p_plus + std::max(0.0, inner);
        for (std::size_t i = 0; i < p.size(); ++i) {
          double dp = loss_derivative(kind, p[i], 1) / np;
          out.gradient.wrt_p[i] = g * pi_p * dp;
          if (!r.clipped) {
            if (estimator == EstimatorKind::WeightedBnpu) {
              out.gradient.wrt_p[i] += pi_p * dp;
            } else {
              out.gradient.wrt_p[i] -= pi_p / np * loss_derivative(kind, p[i], 0);
            }
          }
        }
      }
      break;
    }
  }
  return out;
}

struct Optimizer {
  const TrainConfig& config;
  ModelArrays m, v;  // Adam moments
  std::size_t step = 0;

  explicit Optimizer(const TrainConfig& cfg, const ModelParams& params)
      : config(cfg), m(make_arrays_like(params)), v(make_arrays_like(params)) {}

  void apply(ModelParams& params, ModelArrays& grads) {
    if (config.clip_norm) {
      double sq = 0.0;
      visit_arrays(grads, [&](std::string_view, double* g, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) sq += g[i] * g[i];
      });
      double norm = std::sqrt(sq);
      if (norm > *config.clip_norm && norm > 0.0) {
        double scale = *config.clip_norm / norm;
        visit_arrays(grads, [&](std::string_view, double* g, std::size_t n) {
          for (std::size_t i = 0; i < n; ++i) g[i] *= scale;
        });
      }
    }

    if (config.optimizer == OptimizerKind::Sgd) {
      double lr = config.learning_rate;
      auto pit = collect(params.arrays);
      auto git = collect(grads);
      for (std::size_t a = 0; a < pit.size(); ++a) {
        auto [pd, n] = pit[a];
        const double* gd = git[a].first;
        for (std::size_t i = 0; i < n; ++i) pd[i] -= lr * gd[i];
      }
      return;
    }

    ++step;
    const AdamConfig& ac = config.adam;
    const double bc1 = 1.0 - std::pow(ac.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(ac.beta2, static_cast<double>(step));
    auto pit = collect(params.arrays);
    auto git = collect(grads);
    auto mit = collect(m);
    auto vit = collect(v);
    for (std::size_t a = 0; a < pit.size(); ++a) {
      auto [pd, n] = pit[a];
      double* gd = git[a].first;
      double* md = mit[a].first;
      double* vd = vit[a].first;
      for (std::size_t i = 0; i < n; ++i) {
        md[i] = ac.beta1 * md[i] + (1.0 - ac.beta1) * gd[i];
        vd[i] = ac.beta2 * vd[i] + (1.0 - ac.beta2) * gd[i] * gd[i];
        double mhat = md[i] / bc1;
        double vhat = vd[i] / bc2;
        pd[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + ac.eps);
      }
    }
  }

 private:
  static std::vector<std::pair<double*, std::size_t>> collect(ModelArrays& a) {
    std::vector<std::pair<double*, std::size_t>> out;
    visit_arrays(a, [&](std::string_view, double* d, std::size_t n) {
      out.emplace_back(d, n);
    });
    return out;
  }
};

void zero_arrays(ModelArrays& a) {
  visit_arrays(a, [](std::string_view, double* d, std::size_t n) {
    std::fill(d, d + n, 0.0);
  });
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error("learning rate must be >= 0");
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (batch_size < 1) throw Error("batch size must be >= 1");
  if (!(pi_p > 0.0 && pi_p < 1.0)) {
    throw Error("pi_p must lie in (0,1), got " + std::to_string(pi_p));
  }
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  if (requires_bounded_loss(estimator) && loss != LossKind::Mae) {
    throw Error(to_string(estimator) + " requires the bounded mae loss");
  }
}

bool TrainReport::same_trajectory(const TrainReport& o) const {
  if (epochs.size() != o.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!epochs[i].same_trajectory(o.epochs[i])) return false;
  }
  return true;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch,
                                     std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(Rng::derive(seed, 0x9f0c * (epoch + 1)));
  rng.shuffle(order);
  return order;
}

TrainResult train(const Corpus& corpus, const PULabeling& labeling,
                  const TrainConfig& config, ModelParams params) {
  config.validate();
  if (labeling.positives.size() != corpus.sentences.size()) {
    throw Error("labeling does not cover corpus");
  }
  const std::size_t n_sentences = corpus.sentences.size();
  if (n_sentences == 0) throw Error("empty corpus");

  TrainResult result{std::move(params), {}};
  Optimizer opt(config, result.params);
  ModelArrays grads = make_arrays_like(result.params);

  double best_risk = std::numeric_limits<double>::infinity();
  std::size_t stall = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order = epoch_order(config.seed, epoch, n_sentences);

    EpochStats stats;
    std::size_t n_batches = 0, n_clipped = 0;

    for (std::size_t begin = 0; begin < n_sentences; begin += config.batch_size) {
      const std::size_t end = std::min(begin + config.batch_size, n_sentences);

      std::vector<ForwardTrace> traces;
      traces.reserve(end - begin);
      std::vector<double> scores_p, scores_u;
      // (trace index, token, is_positive) back references for gradient slices
      struct Ref { std::size_t trace, token; bool positive; };
      std::vector<Ref> refs;

      for (std::size_t bi = begin; bi < end; ++bi) {
        const std::size_t si = order[bi];
        const Sentence& sent = corpus.sentences[si];
        traces.push_back(encode_sentence(sent, result.params));
        const ForwardTrace& tr = traces.back();
        for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
          bool pos = labeling.is_positive(si, t);
          refs.push_back(Ref{traces.size() - 1, t, pos});
          (pos ? scores_p : scores_u).push_back(tr.scores[t]);
        }
      }

      BatchRisk br = batch_risk(config.estimator, scores_p, scores_u,
                                config.pi_p, config.gamma, config.loss);
      if (!std::isfinite(br.breakdown.combined) &&
          (config.loss == LossKind::Mae)) {
        throw NumericError("non-finite batch risk at epoch " +
                           std::to_string(epoch) + " (combined=" +
                           std::to_string(br.breakdown.combined) + ")");
      }

      // Scatter per-score derivatives back to sentence slices and backprop.
      std::vector<std::vector<double>> dscores(traces.size());
      for (std::size_t i = 0; i < traces.size(); ++i) {
        dscores[i].assign(traces[i].scores.size(), 0.0);
      }
      std::size_t ip = 0, iu = 0;
      for (const Ref& ref : refs) {
        dscores[ref.trace][ref.token] =
            ref.positive ? br.gradient.wrt_p[ip++] : br.gradient.wrt_u[iu++];
      }
      zero_arrays(grads);
      for (std::size_t i = 0; i < traces.size(); ++i) {
        backward_accumulate(traces[i], dscores[i], result.params, grads);
      }
      opt.apply(result.params, grads);

      stats.combined += br.breakdown.combined;
      stats.r_p_plus += br.breakdown.r_p_plus;
      stats.r_p_minus += br.breakdown.r_p_minus;
      stats.r_u_minus += br.breakdown.r_u_minus;
      ++n_batches;
      if (br.breakdown.clipped) ++n_clipped;
    }

    const double nb = static_cast<double>(n_batches);
    stats.combined /= nb;
    stats.r_p_plus /= nb;
    stats.r_p_minus /= nb;
    stats.r_u_minus /= nb;
    stats.clip_rate = static_cast<double>(n_clipped) / nb;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(stats);

    if (config.patience) {
      if (stats.combined < best_risk) {
        best_risk = stats.combined;
        stall = 0;
      } else if (++stall >= *config.patience) {
        break;
      }
    }
  }
  return result;
}

RiskBreakdown evaluate_risk(const Corpus& corpus, const PULabeling& labeling,
                            const ModelParams& params, const TrainConfig& config) {
  if (labeling.positives.size() != corpus.sentences.size()) {
    throw Error("labeling does not cover corpus");
  }
  std::vector<double> scores_p, scores_u;
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    ForwardTrace tr = encode_sentence(corpus.sentences[si], params);
    for (std::size_t t = 0; t < tr.scores.size(); ++t) {
      (labeling.is_positive(si, t) ? scores_p : scores_u).push_back(tr.scores[t]);
    }
  }
  return estimate_risk(config.estimator, scores_p, scores_u, config.pi_p,
                       config.gamma, config.loss);
}

void write_report_kv(const TrainReport& report, std::ostream& out) {
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const EpochStats& s = report.epochs[e];
    out << "epoch=" << e << " risk=" << s.combined << " r_p_plus=" << s.r_p_plus
        << " r_p_minus=" << s.r_p_minus << " r_u_minus=" << s.r_u_minus
        << " clip_rate=" << s.clip_rate << " wall_s=" << s.wall_seconds << "\n";
  }
}

void write_report_csv(const TrainReport& report, const std::string& path) {
  std::ostringstream out;
  out << "epoch,risk,r_p_plus,r_p_minus,r_u_minus,clip_rate\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const EpochStats& s = report.epochs[e];
    out << e << ',' << s.combined << ',' << s.r_p_plus << ',' << s.r_p_minus
        << ',' << s.r_u_minus << ',' << s.clip_rate << "\n";
  }
  write_file_atomic(path, out.str());
}

}  // namespace puner

#include "puner/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "puner/error.hpp"
#include "puner/rng.hpp"

namespace puner {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> draw_point(Rng& rng, std::size_t dim, double mean_x1,
                               double sigma) {
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = sigma * rng.gaussian();
  x[0] += mean_x1;
  return x;
}

}  // namespace

void SynthConfig::validate() const {
  if (dim < 1) throw Error("dim must be >= 1");
  if (!(pi_p > 0.0 && pi_p <= 1.0)) throw Error("pi_p must lie in (0,1]");
  if (n_p < 1 || n_u < 1 || resamples < 1) {
    throw Error("n_p, n_u, resamples must be >= 1");
  }
}

PuSample sample_pu(const SynthConfig& config) {
  return sample_pu(config, config.seed);
}

PuSample sample_pu(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  PuSample s;
  s.positives.reserve(config.n_p);
  for (std::size_t i = 0; i < config.n_p; ++i) {
    s.positives.push_back(draw_point(rng, config.dim, config.mu, config.sigma));
  }
  s.unlabeled.reserve(config.n_u);
  s.unlabeled_labels.reserve(config.n_u);
  for (std::size_t i = 0; i < config.n_u; ++i) {
    int y = rng.uniform() < config.pi_p ? 1 : 0;
    double mean = y == 1 ? config.mu : -config.mu;
    s.unlabeled.push_back(draw_point(rng, config.dim, mean, config.sigma));
    s.unlabeled_labels.push_back(y);
  }
  return s;
}

double LinearScorer::operator()(std::span<const double> x) const {
  double z = b;
  for (std::size_t i = 0; i < w.size() && i < x.size(); ++i) z += w[i] * x[i];
  return stable_sigmoid(z);
}

namespace {

std::vector<double> score_all(const Scorer& scorer,
                              const std::vector<std::vector<double>>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(scorer(x));
  return out;
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(xs.size() - 1));
}

}  // namespace

UnbiasednessResult unbiasedness_experiment(const SynthConfig& config,
                                           const Scorer& scorer, LossKind kind,
                                           std::size_t reference_points) {
  config.validate();
  if (reference_points < 1000000) {
    throw Error("reference sample must hold at least 1e6 points");
  }

  // True risk by Monte Carlo over the labeled joint distribution.
  Rng ref_rng(Rng::derive(config.seed, 0xA11CE));
  double true_sum = 0.0;
  for (std::size_t i = 0; i < reference_points; ++i) {
    int y = ref_rng.uniform() < config.pi_p ? 1 : 0;
    double mean = y == 1 ? config.mu : -config.mu;
    std::vector<double> x = draw_point(ref_rng, config.dim, mean, config.sigma);
    true_sum += loss_value(kind, scorer(x), y);
  }

  UnbiasednessResult res;
  res.true_risk = true_sum / static_cast<double>(reference_points);
  res.estimates.reserve(config.resamples);
  for (std::size_t m = 0; m < config.resamples; ++m) {
    PuSample s = sample_pu(config, Rng::derive(config.seed, m));
    std::vector<double> sp = score_all(scorer, s.positives);
    std::vector<double> su = score_all(scorer, s.unlabeled);
    res.estimates.push_back(upu_risk(sp, su, config.pi_p, kind).combined);
  }

  double sum = 0.0;
  for (double e : res.estimates) sum += e;
  res.mean_estimate = sum / static_cast<double>(res.estimates.size());
  double sd = sample_std(res.estimates, res.mean_estimate);
  res.std_error = sd / std::sqrt(static_cast<double>(res.estimates.size()));
  if (res.std_error == 0.0) {
    res.exact_match = res.mean_estimate == res.true_risk;
    res.z = std::numeric_limits<double>::quiet_NaN();
  } else {
    res.z = (res.mean_estimate - res.true_risk) / res.std_error;
  }
  return res;
}

std::vector<ConsistencyRow> consistency_experiment(
    const SynthConfig& config, const Scorer& scorer, LossKind kind,
    const std::vector<std::pair<std::size_t, std::size_t>>& sizes) {
  config.validate();
  std::vector<ConsistencyRow> rows;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    SynthConfig c = config;
    c.n_p = sizes[si].first;
    c.n_u = sizes[si].second;
    std::vector<double> estimates;
    estimates.reserve(c.resamples);
    for (std::size_t m = 0; m < c.resamples; ++m) {
      PuSample s = sample_pu(c, Rng::derive(config.seed, si * 1000003 + m));
      std::vector<double> sp = score_all(scorer, s.positives);
      std::vector<double> su = score_all(scorer, s.unlabeled);
      estimates.push_back(upu_risk(sp, su, c.pi_p, kind).combined);
    }
    double sum = 0.0;
    for (double e : estimates) sum += e;
    ConsistencyRow row;
    row.n_p = c.n_p;
    row.n_u = c.n_u;
    row.mean = sum / static_cast<double>(estimates.size());
    row.std_dev = sample_std(estimates, row.mean);
    rows.push_back(row);
  }
  return rows;
}

bool consistency_trend_holds(const std::vector<ConsistencyRow>& rows,
                             double ideal_ratio, double slack) {
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].std_dev <= 0.0) return false;
    double ratio = rows[i + 1].std_dev / rows[i].std_dev;
    if (ratio < ideal_ratio - slack || ratio > ideal_ratio + slack) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// ToyMlp

ToyMlp::ToyMlp(std::size_t dim, std::size_t hidden, std::uint64_t seed)
    : dim_(dim), hidden_(hidden), w1_(hidden * dim), b1_(hidden, 0.0),
      w2_(hidden) {
  Rng rng(seed);
  double r1 = std::sqrt(6.0 / static_cast<double>(dim + hidden));
  for (double& w : w1_) w = rng.uniform(-r1, r1);
  double r2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  for (double& w : w2_) w = rng.uniform(-r2, r2);
}

double ToyMlp::score(std::span<const double> x) const {
  double z2 = b2_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    double z1 = b1_[h];
    for (std::size_t i = 0; i < dim_; ++i) z1 += w1_[h * dim_ + i] * x[i];
    z2 += w2_[h] * std::tanh(z1);
  }
  return stable_sigmoid(z2);
}

double ToyMlp::train_step(const PuSample& sample, EstimatorKind estimator,
                          LossKind kind, double pi_p, double gamma, double lr) {
  struct Cache {
    std::vector<double> hidden_act;  // tanh values
    double f = 0.0;
  };
  auto forward = [&](const std::vector<double>& x, Cache& c) {
    c.hidden_act.resize(hidden_);
    double z2 = b2_;
    for (std::size_t h = 0; h < hidden_; ++h) {
      double z1 = b1_[h];
      for (std::size_t i = 0; i < dim_; ++i) z1 += w1_[h * dim_ + i] * x[i];
      c.hidden_act[h] = std::tanh(z1);
      z2 += w2_[h] * c.hidden_act[h];
    }
    c.f = stable_sigmoid(z2);
  };

  std::vector<Cache> cache_p(sample.positives.size());
  std::vector<Cache> cache_u(sample.unlabeled.size());
  std::vector<double> sp(sample.positives.size()), su(sample.unlabeled.size());
  for (std::size_t i = 0; i < sample.positives.size(); ++i) {
    forward(sample.positives[i], cache_p[i]);
    sp[i] = cache_p[i].f;
  }
  for (std::size_t i = 0; i < sample.unlabeled.size(); ++i) {
    forward(sample.unlabeled[i], cache_u[i]);
    su[i] = cache_u[i].f;
  }

  RiskBreakdown risk = estimate_risk(estimator, sp, su, pi_p, gamma, kind);
  RiskGradient grad = risk_gradient(estimator, sp, su, pi_p, gamma, kind);

  std::vector<double> gw1(w1_.size(), 0.0), gb1(b1_.size(), 0.0);
  std::vector<double> gw2(w2_.size(), 0.0);
  double gb2 = 0.0;
  auto backward = [&](const std::vector<double>& x, const Cache& c, double df) {
    double dz2 = df * c.f * (1.0 - c.f);
    gb2 += dz2;
    for (std::size_t h = 0; h < hidden_; ++h) {
      gw2[h] += dz2 * c.hidden_act[h];
      double dz1 = dz2 * w2_[h] * (1.0 - c.hidden_act[h] * c.hidden_act[h]);
      gb1[h] += dz1;
      for (std::size_t i = 0; i < dim_; ++i) gw1[h * dim_ + i] += dz1 * x[i];
    }
  };
  for (std::size_t i = 0; i < sample.positives.size(); ++i) {
    backward(sample.positives[i], cache_p[i], grad.wrt_p[i]);
  }
  for (std::size_t i = 0; i < sample.unlabeled.size(); ++i) {
    backward(sample.unlabeled[i], cache_u[i], grad.wrt_u[i]);
  }

  for (std::size_t i = 0; i < w1_.size(); ++i) w1_[i] -= lr * gw1[i];
  for (std::size_t i = 0; i < b1_.size(); ++i) b1_[i] -= lr * gb1[i];
  for (std::size_t i = 0; i < w2_.size(); ++i) w2_[i] -= lr * gw2[i];
  b2_ -= lr * gb2;
  return risk.combined;
}

DivergenceResult divergence_experiment(const SynthConfig& config,
                                       EstimatorKind estimator, LossKind kind,
                                       std::size_t steps, double lr,
                                       std::size_t hidden) {
  config.validate();
  PuSample sample = sample_pu(config, Rng::derive(config.seed, 0xD1E));
  ToyMlp mlp(config.dim, hidden, Rng::derive(config.seed, 0x71E));

  DivergenceResult res;
  res.min_risk = std::numeric_limits<double>::infinity();
  res.trajectory.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    double risk = mlp.train_step(sample, estimator, kind, config.pi_p,
                                 /*gamma=*/1.0, lr);
    res.trajectory.push_back(risk);
    res.min_risk = std::min(res.min_risk, risk);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic NER corpus

namespace {

// Deterministic pronounceable pseudo-word.
std::string pseudo_word(Rng& rng, std::size_t min_syllables,
                        std::size_t max_syllables) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m",
                                  "n", "p", "r", "s", "t", "v", "z"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u"};
  static const char* kCodas[] = {"", "", "n", "r", "l", "s"};
  std::size_t n =
      min_syllables + rng.index(max_syllables - min_syllables + 1);
  std::string w;
  for (std::size_t i = 0; i < n; ++i) {
    w += kOnsets[rng.index(std::size(kOnsets))];
    w += kVowels[rng.index(std::size(kVowels))];
    w += kCodas[rng.index(std::size(kCodas))];
  }
  return w;
}

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') {
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
  }
  return w;
}

}  // namespace

NerGenResult generate_ner_corpus(const NerGenConfig& config) {
  if (config.sentences == 0) throw Error("sentence count must be positive");
  if (config.min_sentence_len < 2 ||
      config.max_sentence_len < config.min_sentence_len) {
    throw Error("bad sentence length bounds");
  }
  Rng rng(config.seed);

  // Vocabulary. Common and entity words are kept disjoint by construction:
  // entity tokens are capitalized, common words stay lowercase.
  std::vector<std::string> common;
  std::set<std::string> seen;
  while (common.size() < config.common_words) {
    std::string w = pseudo_word(rng, 1, 3);
    if (seen.insert(w).second) common.push_back(w);
  }
  std::vector<std::string> triggers(
      common.begin(),
      common.begin() + std::min<std::size_t>(config.trigger_words, common.size()));

  std::vector<std::vector<std::string>> surfaces;
  std::set<std::vector<std::string>> seen_surfaces;
  while (surfaces.size() < config.entity_surfaces) {
    std::vector<std::string> surface;
    std::size_t n_tokens = rng.uniform() < config.two_token_prob ? 2 : 1;
    for (std::size_t i = 0; i < n_tokens; ++i) {
      surface.push_back(capitalize(pseudo_word(rng, 2, 3)));
    }
    if (seen_surfaces.insert(surface).second) surfaces.push_back(surface);
  }

  NerGenResult result;
  result.surfaces = surfaces;
  for (std::size_t si = 0; si < config.sentences; ++si) {
    std::size_t target_len =
        config.min_sentence_len +
        rng.index(config.max_sentence_len - config.min_sentence_len + 1);
    Sentence sent;
    sent.gold = std::vector<GoldSpan>{};
    bool after_entity = false;
    while (sent.tokens.size() < target_len) {
      bool plant = !after_entity && rng.uniform() < config.entity_prob;
      if (plant) {
        if (rng.uniform() < config.trigger_prob) {
          sent.tokens.emplace_back(triggers[rng.index(triggers.size())]);
        }
        const std::vector<std::string>& surface =
            surfaces[rng.index(surfaces.size())];
        std::size_t start = sent.tokens.size();
        for (const std::string& t : surface) sent.tokens.emplace_back(t);
        sent.gold->push_back(
            GoldSpan{start, sent.tokens.size() - 1, config.etype});
        after_entity = true;  // force a separator before the next entity
      } else {
        sent.tokens.emplace_back(common[rng.index(common.size())]);
        after_entity = false;
      }
    }
    // A sentence may overshoot target_len by an entity tail; that is fine.
    result.corpus.sentences.push_back(std::move(sent));
  }
  result.corpus.rebuild_type_inventory();
  return result;
}

Dictionary dictionary_from_surfaces(
    const std::vector<std::vector<std::string>>& surfaces, double fraction,
    const std::string& etype, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("fraction must lie in [0,1]");
  }
  std::vector<std::vector<std::string>> shuffled = surfaces;
  Rng rng(seed);
  rng.shuffle(shuffled);
  std::size_t keep = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(shuffled.size())));
  Dictionary dict(etype);
  for (std::size_t i = 0; i < keep && i < shuffled.size(); ++i) {
    dict.add(shuffled[i]);
  }
  return dict;
}

}  // namespace puner

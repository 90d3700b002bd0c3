#include <doctest.h>

#include <cmath>

#include "puner/error.hpp"
#include "puner/rng.hpp"
#include "puner/synthlab.hpp"

using namespace puner;

TEST_CASE("pi_p = 1 produces a pure positive unlabeled pool") {
  SynthConfig cfg;
  cfg.pi_p = 1.0;
  cfg.n_p = 10;
  cfg.n_u = 200;
  PuSample s = sample_pu(cfg);
  for (int y : s.unlabeled_labels) CHECK(y == 1);
}

TEST_CASE("unlabeled positive fraction stays within binomial bounds") {
  SynthConfig cfg;
  cfg.pi_p = 0.3;
  cfg.n_u = 20000;
  cfg.n_p = 1;
  PuSample s = sample_pu(cfg);
  double frac = 0.0;
  for (int y : s.unlabeled_labels) frac += y;
  frac /= static_cast<double>(cfg.n_u);
  double sigma = std::sqrt(0.3 * 0.7 / cfg.n_u);
  CHECK(std::fabs(frac - 0.3) <= 3.0 * sigma);
}

TEST_CASE("sampling is deterministic per seed") {
  SynthConfig cfg;
  PuSample a = sample_pu(cfg, 5);
  PuSample b = sample_pu(cfg, 5);
  CHECK(a.positives == b.positives);
  CHECK(a.unlabeled == b.unlabeled);
  PuSample c = sample_pu(cfg, 6);
  CHECK(a.positives != c.positives);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SynthConfig{};
  cfg.pi_p = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("constant scorer estimates 0.5 exactly with zero variance") {
  SynthConfig cfg;
  cfg.resamples = 50;
  cfg.n_p = 20;
  cfg.n_u = 50;
  Scorer constant = [](std::span<const double>) { return 0.5; };
  UnbiasednessResult r =
      unbiasedness_experiment(cfg, constant, LossKind::Mae, 1000000);
  for (double e : r.estimates) CHECK(e == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.std_error == 0.0);
  CHECK(r.exact_match);
  CHECK(std::isnan(r.z));
}

TEST_CASE("linear scorer is unbiased: |z| <= 3") {
  SynthConfig cfg;
  cfg.dim = 2;
  cfg.n_p = 200;       // smaller than the acceptance run, for speed
  cfg.n_u = 800;
  cfg.resamples = 400;
  LinearScorer scorer{{1.2, -0.3}, 0.1};
  UnbiasednessResult r =
      unbiasedness_experiment(cfg, scorer, LossKind::Mae, 1000000);
  INFO("mean ", r.mean_estimate, " true ", r.true_risk, " z ", r.z);
  CHECK(std::fabs(r.z) <= 3.0);
}

TEST_CASE("bnpu estimate dominates upu estimate on every resample") {
  SynthConfig cfg;
  cfg.n_p = 30;
  cfg.n_u = 60;
  LinearScorer scorer{{1.0, 0.0}, 0.0};
  for (std::size_t m = 0; m < 100; ++m) {
    PuSample s = sample_pu(cfg, Rng::derive(3, m));
    std::vector<double> sp, su;
    for (const auto& x : s.positives) sp.push_back(scorer(x));
    for (const auto& x : s.unlabeled) su.push_back(scorer(x));
    double upu = upu_risk(sp, su, cfg.pi_p, LossKind::Mae).combined;
    double bnpu = bnpu_risk(sp, su, cfg.pi_p, LossKind::Mae).combined;
    CHECK(bnpu >= upu);
  }
}

TEST_CASE("mae estimates respect the a-priori range") {
  SynthConfig cfg;
  cfg.pi_p = 0.4;
  cfg.n_p = 25;
  cfg.n_u = 50;
  LinearScorer scorer{{2.0, 1.0}, -0.5};
  for (std::size_t m = 0; m < 200; ++m) {
    PuSample s = sample_pu(cfg, Rng::derive(17, m));
    std::vector<double> sp, su;
    for (const auto& x : s.positives) sp.push_back(scorer(x));
    for (const auto& x : s.unlabeled) su.push_back(scorer(x));
    double est = upu_risk(sp, su, cfg.pi_p, LossKind::Mae).combined;
    CHECK(est >= -cfg.pi_p);
    CHECK(est <= 1.0 + cfg.pi_p);
  }
}

TEST_CASE("a scorer overfit to one positive point drives CE estimates below -10") {
  SynthConfig cfg;
  cfg.pi_p = 0.7;
  cfg.n_p = 1;
  cfg.n_u = 50;
  PuSample s = sample_pu(cfg, 904);
  const std::vector<double> target = s.positives[0];

  // sharp bump centered exactly on the positive example
  Scorer bump = [target](std::span<const double> x) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      d2 += (x[i] - target[i]) * (x[i] - target[i]);
    }
    double z = 40.0 - 4e4 * d2;
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  };

  // no unlabeled point may sit inside the bump for the construction to work
  for (const auto& x : s.unlabeled) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      d2 += (x[i] - target[i]) * (x[i] - target[i]);
    }
    REQUIRE(d2 > 2.5e-3);
  }

  std::vector<double> sp{bump(s.positives[0])};
  std::vector<double> su;
  for (const auto& x : s.unlabeled) su.push_back(bump(x));
  double est = upu_risk(sp, su, cfg.pi_p, LossKind::CrossEntropy).combined;
  CHECK(est < -10.0);
}

TEST_CASE("estimator spread shrinks like sqrt(n)") {
  SynthConfig cfg;
  cfg.resamples = 300;
  LinearScorer scorer{{1.0, 0.0}, 0.0};
  auto rows = consistency_experiment(cfg, scorer, LossKind::Mae,
                                     {{100, 400}, {400, 1600}});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].std_dev < rows[0].std_dev);
  // quadrupling both sizes should halve the spread, within generous slack
  CHECK(consistency_trend_holds(rows, 0.5, 0.2));
}

TEST_CASE("divergence: ce+upu dips below zero, mae+bnpu never does") {
  SynthConfig cfg;
  cfg.dim = 2;
  cfg.pi_p = 0.5;
  cfg.n_p = 10;
  cfg.n_u = 40;
  cfg.seed = 2;

  DivergenceResult ce = divergence_experiment(cfg, EstimatorKind::Upu,
                                              LossKind::CrossEntropy,
                                              /*steps=*/300, /*lr=*/0.5);
  INFO("ce min risk ", ce.min_risk);
  CHECK(ce.min_risk < -1.0);

  DivergenceResult bn = divergence_experiment(cfg, EstimatorKind::Bnpu,
                                              LossKind::Mae, 300, 0.5);
  CHECK(bn.min_risk >= 0.0);
  for (double r : bn.trajectory) CHECK(r >= 0.0);

  DivergenceResult bu = divergence_experiment(cfg, EstimatorKind::Bupu,
                                              LossKind::Mae, 300, 0.5);
  CHECK(bu.min_risk >= -cfg.pi_p);
}

TEST_CASE("generated ner corpus is deterministic and well formed") {
  NerGenConfig cfg;
  cfg.sentences = 50;
  cfg.seed = 11;
  NerGenResult a = generate_ner_corpus(cfg);
  NerGenResult b = generate_ner_corpus(cfg);
  REQUIRE(a.corpus.sentences.size() == 50);
  CHECK(a.surfaces == b.surfaces);
  for (std::size_t si = 0; si < a.corpus.sentences.size(); ++si) {
    const Sentence& sa = a.corpus.sentences[si];
    const Sentence& sb = b.corpus.sentences[si];
    REQUIRE(sa.tokens.size() == sb.tokens.size());
    for (std::size_t t = 0; t < sa.tokens.size(); ++t) {
      CHECK(sa.tokens[t].surface == sb.tokens[t].surface);
    }
  }

  CHECK(a.corpus.type_inventory == std::set<std::string>{"PER"});
  std::size_t entity_tokens = 0, total_tokens = 0;
  for (const Sentence& s : a.corpus.sentences) {
    total_tokens += s.tokens.size();
    REQUIRE(s.gold.has_value());
    std::size_t prev_end = 0;
    bool first = true;
    for (const GoldSpan& g : *s.gold) {
      CHECK(g.end < s.tokens.size());
      entity_tokens += g.end - g.start + 1;
      if (!first) CHECK(g.start > prev_end + 1);  // entities never adjacent
      prev_end = g.end;
      first = false;
    }
  }
  double pi = static_cast<double>(entity_tokens) / total_tokens;
  CHECK(pi > 0.03);
  CHECK(pi < 0.4);
}

TEST_CASE("dictionary_from_surfaces keeps the requested fraction") {
  NerGenConfig cfg;
  cfg.sentences = 10;
  NerGenResult g = generate_ner_corpus(cfg);
  Dictionary d30 = dictionary_from_surfaces(g.surfaces, 0.3, "PER", 1);
  CHECK(d30.size() == std::size_t(std::llround(0.3 * g.surfaces.size())));
  Dictionary all = dictionary_from_surfaces(g.surfaces, 1.0, "PER", 1);
  CHECK(all.size() == g.surfaces.size());
  Dictionary none = dictionary_from_surfaces(g.surfaces, 0.0, "PER", 1);
  CHECK(none.size() == 0);
}

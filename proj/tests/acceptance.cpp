// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exits with the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include "puner/adapt.hpp"
#include "puner/corpus.hpp"
#include "puner/decoder.hpp"
#include "puner/error.hpp"
#include "puner/eval.hpp"
#include "puner/featenc.hpp"
#include "puner/gazetteer.hpp"
#include "puner/purisk.hpp"
#include "puner/rng.hpp"
#include "puner/synthlab.hpp"
#include "puner/trainer.hpp"

using namespace puner;

namespace {

struct CheckFailure {
  std::string message;
};

void check(bool ok, const std::string& message) {
  if (!ok) throw CheckFailure{message};
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

Sentence make_sentence(const std::vector<std::string>& words) {
  Sentence s;
  for (const std::string& w : words) s.tokens.emplace_back(w);
  return s;
}

// ---------------------------------------------------------------------------
// 1. Dictionary labeling of the boxing sentence

void criterion_figure1() {
  Sentence s = make_sentence({"Bobick", "said", "Joe", "Frazier", "talks"});
  Dictionary dict("PER");
  dict.add({"Joe"});
  Corpus c;
  c.sentences.push_back(s);
  PULabeling lab = label_corpus(c, dict, 4);
  check(lab.positives[0] == std::vector<std::size_t>{2},
        "expected exactly the token 'Joe' positive");
}

// ---------------------------------------------------------------------------
// 2. Greedy matcher equals an independent brute-force oracle

std::vector<TokenSpan> brute_force_match(const Sentence& s, const Dictionary& dict,
                                         std::size_t k) {
  std::vector<TokenSpan> spans;
  const std::size_t n = s.tokens.size();
  std::size_t i = 0;
  while (i < n) {
    bool matched = false;
    for (std::size_t len = std::min(k + 1, n - i); len >= 1 && !matched; --len) {
      for (const auto& entry : dict.entries()) {
        if (entry.size() != len) continue;
        bool eq = true;
        for (std::size_t j = 0; j < len; ++j) {
          if (entry[j] != s.tokens[i + j].surface) {
            eq = false;
            break;
          }
        }
        if (eq) {
          spans.push_back(TokenSpan{i, i + len - 1});
          i += len;
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++i;
  }
  return spans;
}

void criterion_matching_oracle() {
  static const char* kWords[] = {"a", "b", "c", "d", "e", "f"};
  Rng rng(4242);
  for (int rep = 0; rep < 1000; ++rep) {
    std::size_t len = 1 + rng.index(20);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < len; ++i) {
      words.push_back(kWords[rng.index(std::size(kWords))]);
    }
    Sentence s = make_sentence(words);
    Dictionary d("X");
    std::size_t n_entries = rng.index(10);
    for (std::size_t e = 0; e < n_entries; ++e) {
      std::vector<std::string> entry;
      std::size_t elen = 1 + rng.index(5);
      for (std::size_t i = 0; i < elen; ++i) {
        entry.push_back(kWords[rng.index(std::size(kWords))]);
      }
      d.add(entry);
    }
    std::size_t k = rng.index(6);
    auto got = max_match(s, d, k);
    auto expect = brute_force_match(s, d, k);
    check(got.size() == expect.size() &&
              std::equal(got.begin(), got.end(), expect.begin()),
          "mismatch against oracle at rep " + std::to_string(rep));
  }
}

// ---------------------------------------------------------------------------
// 3. Risk formula oracles

void criterion_formula_oracles() {
  std::vector<double> p{0.9}, u{0.2, 0.4};
  double upu = upu_risk(p, u, 0.5, LossKind::Mae).combined;
  check(std::fabs(upu - (-0.1)) < 1e-12, "upu expected -0.1, got " + fmt(upu));
  RiskBreakdown bn = bnpu_risk(p, u, 0.5, LossKind::Mae);
  check(std::fabs(bn.combined - 0.05) < 1e-12,
        "bnpu expected 0.05, got " + fmt(bn.combined));
  check(bn.clipped, "bnpu clip flag expected");
  double weighted = weighted_training_risk(p, u, 0.5, 2.0).combined;
  check(std::fabs(weighted - 0.10) < 1e-12,
        "weighted expected 0.10, got " + fmt(weighted));
}

// ---------------------------------------------------------------------------
// 4. Full-model gradient check under every estimator

void criterion_gradient_check() {
  struct Setup {
    EstimatorKind est;
    LossKind kind;
  };
  const Setup setups[] = {
      {EstimatorKind::Supervised, LossKind::Mae},
      {EstimatorKind::Supervised, LossKind::CrossEntropy},
      {EstimatorKind::Upu, LossKind::Mae},
      {EstimatorKind::Upu, LossKind::CrossEntropy},
      {EstimatorKind::Bupu, LossKind::Mae},
      {EstimatorKind::Bnpu, LossKind::Mae},
      {EstimatorKind::WeightedBnpu, LossKind::Mae},
  };

  HyperParams hp;
  hp.char_dim = 3;
  hp.conv_width = 3;
  hp.n_filters = 2;
  hp.word_dim = 3;
  hp.hidden_dim = 3;

  Rng master(60601);
  int configs_checked = 0;
  for (const Setup& setup : setups) {
    for (int rep = 0; rep < 4; ++rep) {
      std::uint64_t seed = master.next_u64();

      Corpus c;
      c.sentences.push_back(make_sentence({"Anna", "met", "bo"}));
      c.sentences.push_back(make_sentence({"URS", "x7", "me", "Anna"}));
      ModelParams m = init_model(c, hp, seed);

      PULabeling lab;
      lab.etype = "PER";
      lab.positives = {{0}, {0, 3}};

      const double pi = 0.3, gamma = 2.0;
      auto risk_of = [&](const ModelParams& params) {
        std::vector<double> sp, su;
        for (std::size_t si = 0; si < c.sentences.size(); ++si) {
          ForwardTrace tr = encode_sentence(c.sentences[si], params);
          for (std::size_t t = 0; t < tr.scores.size(); ++t) {
            (lab.is_positive(si, t) ? sp : su).push_back(tr.scores[t]);
          }
        }
        return estimate_risk(setup.est, sp, su, pi, gamma, setup.kind).combined;
      };

      // keep clear of the non-negative clamp kink, where the FD straddles a
      // subgradient discontinuity
      if (setup.est == EstimatorKind::Bnpu ||
          setup.est == EstimatorKind::WeightedBnpu) {
        std::vector<double> sp, su;
        for (std::size_t si = 0; si < c.sentences.size(); ++si) {
          ForwardTrace tr = encode_sentence(c.sentences[si], m);
          for (std::size_t t = 0; t < tr.scores.size(); ++t) {
            (lab.is_positive(si, t) ? sp : su).push_back(tr.scores[t]);
          }
        }
        RiskBreakdown r = bnpu_risk(sp, su, pi, LossKind::Mae);
        if (std::fabs(r.r_u_minus - pi * r.r_p_minus) < 1e-3) continue;
      }

      // analytic gradient: risk_gradient scattered through backward()
      ModelArrays grads = make_arrays_like(m);
      {
        std::vector<double> sp, su;
        std::vector<ForwardTrace> traces;
        struct Ref { std::size_t si, t; bool pos; };
        std::vector<Ref> refs;
        for (std::size_t si = 0; si < c.sentences.size(); ++si) {
          traces.push_back(encode_sentence(c.sentences[si], m));
          for (std::size_t t = 0; t < traces[si].scores.size(); ++t) {
            bool pos = lab.is_positive(si, t);
            refs.push_back(Ref{si, t, pos});
            (pos ? sp : su).push_back(traces[si].scores[t]);
          }
        }
        RiskGradient rg = risk_gradient(setup.est, sp, su, pi, gamma, setup.kind);
        std::vector<std::vector<double>> dscores(traces.size());
        for (std::size_t si = 0; si < traces.size(); ++si) {
          dscores[si].assign(traces[si].scores.size(), 0.0);
        }
        std::size_t ip = 0, iu = 0;
        for (const Ref& ref : refs) {
          dscores[ref.si][ref.t] = ref.pos ? rg.wrt_p[ip++] : rg.wrt_u[iu++];
        }
        for (std::size_t si = 0; si < traces.size(); ++si) {
          backward_accumulate(traces[si], dscores[si], m, grads);
        }
      }

      const double h = 1e-5;
      std::vector<std::pair<double*, std::size_t>> params_flat, grads_flat;
      visit_arrays(m.arrays, [&](std::string_view, double* d, std::size_t n) {
        params_flat.emplace_back(d, n);
      });
      visit_arrays(grads, [&](std::string_view, double* d, std::size_t n) {
        grads_flat.emplace_back(d, n);
      });
      for (std::size_t a = 0; a < params_flat.size(); ++a) {
        auto [pd, n] = params_flat[a];
        double* gd = grads_flat[a].first;
        std::size_t stride = n > 24 ? n / 11 : 1;
        for (std::size_t i = 0; i < n; i += stride) {
          double orig = pd[i];
          pd[i] = orig + h;
          double up = risk_of(m);
          pd[i] = orig - h;
          double down = risk_of(m);
          pd[i] = orig;
          double fd = (up - down) / (2.0 * h);
          double diff = std::fabs(gd[i] - fd);
          double scale = std::max(std::fabs(gd[i]), std::fabs(fd));
          check(diff <= 1e-4 * scale || diff <= 1e-8,
                "gradient mismatch (" + to_string(setup.est) + "/" +
                    to_string(setup.kind) + ") array " + std::to_string(a) +
                    " index " + std::to_string(i) + ": analytic " + fmt(gd[i]) +
                    " vs numeric " + fmt(fd));
        }
      }
      ++configs_checked;
    }
  }
  check(configs_checked >= 20, "only " + std::to_string(configs_checked) +
                                   " configurations checked");
}

// ---------------------------------------------------------------------------
// 5. Unbiasedness of the uPU estimate

void criterion_unbiasedness() {
  SynthConfig cfg;
  cfg.dim = 2;
  cfg.n_p = 500;
  cfg.n_u = 2000;
  cfg.resamples = 1000;
  cfg.seed = 90210;
  LinearScorer scorer{{1.0, 0.0}, 0.0};
  UnbiasednessResult r =
      unbiasedness_experiment(cfg, scorer, LossKind::Mae, 10000000);
  check(std::fabs(r.z) <= 3.0,
        "z = " + fmt(r.z) + " (mean " + fmt(r.mean_estimate) + ", true " +
            fmt(r.true_risk) + ")");
}

// ---------------------------------------------------------------------------
// 6. sqrt(n) consistency trend

void criterion_consistency() {
  SynthConfig cfg;
  cfg.dim = 2;
  cfg.resamples = 1000;
  cfg.seed = 5150;
  LinearScorer scorer{{1.0, 0.0}, 0.0};
  auto rows = consistency_experiment(cfg, scorer, LossKind::Mae,
                                     {{125, 500}, {500, 2000}, {2000, 8000}});
  check(rows.size() == 3, "expected three rows");
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    double ratio = rows[i + 1].std_dev / rows[i].std_dev;
    check(ratio >= 0.35 && ratio <= 0.65,
          "std ratio " + fmt(ratio) + " outside 0.5 +/- 0.15 at step " +
              std::to_string(i));
  }
}

// ---------------------------------------------------------------------------
// 7. Unbounded-loss divergence and the bounded control

void criterion_divergence() {
  SynthConfig cfg;
  cfg.dim = 2;
  cfg.pi_p = 0.5;
  cfg.n_p = 10;
  cfg.n_u = 40;
  cfg.seed = 2;

  DivergenceResult ce = divergence_experiment(cfg, EstimatorKind::Upu,
                                              LossKind::CrossEntropy, 500, 0.5);
  check(ce.min_risk < -1.0, "ce+upu min risk " + fmt(ce.min_risk) +
                                " did not cross -1.0 within 500 steps");

  DivergenceResult bn =
      divergence_experiment(cfg, EstimatorKind::Bnpu, LossKind::Mae, 500, 0.5);
  for (std::size_t s = 0; s < bn.trajectory.size(); ++s) {
    check(bn.trajectory[s] >= 0.0,
          "mae+bnpu risk dipped below zero at step " + std::to_string(s));
  }
}

// ---------------------------------------------------------------------------
// 8. Span decoding and conflict resolution

void criterion_decoding() {
  Matrix m(1, 5);
  double vals[] = {0.9, 0.8, 0.1, 0.2, 0.7};
  for (std::size_t t = 0; t < 5; ++t) m.at(0, t) = vals[t];
  auto spans = decode_spans(resolve_conflicts(m, 0.5), m, {"PER"});
  check(spans.size() == 2, "expected two spans");
  check(spans[0].start == 0 && spans[0].end == 1, "first span should be w1..w2");
  check(spans[1].start == 4 && spans[1].end == 4, "second span should be w5");

  Matrix conflict(2, 1);
  conflict.at(0, 0) = 0.6;  // LOC
  conflict.at(1, 0) = 0.8;  // PER
  auto labels = resolve_conflicts(conflict, 0.5);
  check(labels[0][0] == 0 && labels[1][0] == 1,
        "PER at 0.8 should win over LOC at 0.6");
}

// ---------------------------------------------------------------------------
// 9 + 10. End-to-end synthetic NER with dictionary adaptation, then
// prior estimation on the same corpus and model

struct AdaptOutcome {
  Corpus corpus;
  ModelParams params;
  double true_pi = 0.0;
};
std::optional<AdaptOutcome> g_adapted;

void criterion_end_to_end() {
  NerGenConfig gen;
  gen.sentences = 2000;
  gen.seed = 424242;
  NerGenResult data = generate_ner_corpus(gen);
  Dictionary dict = dictionary_from_surfaces(data.surfaces, 0.3, "PER", 17);

  // matching baseline
  std::vector<std::vector<PredSpan>> match_pred(data.corpus.sentences.size());
  for (std::size_t si = 0; si < data.corpus.sentences.size(); ++si) {
    for (const TokenSpan& m : max_match(data.corpus.sentences[si], dict, 4)) {
      match_pred[si].push_back(PredSpan{m.start, m.end, "PER", 1.0});
    }
  }
  F1Report match_f1 = entity_f1(data.corpus, match_pred);

  AdaptConfig cfg;
  cfg.k_occ = 2;
  cfg.max_iterations = 5;
  cfg.model_hp.char_dim = 8;
  cfg.model_hp.conv_width = 3;
  cfg.model_hp.n_filters = 8;
  cfg.model_hp.word_dim = 8;
  cfg.model_hp.hidden_dim = 16;
  cfg.train.estimator = EstimatorKind::WeightedBnpu;
  // the class weight counteracts the imbalance; sized against the rough
  // prior so the positive term is not drowned by the unlabeled term
  cfg.train.gamma = 15.0;
  cfg.train.epochs = 8;
  cfg.train.learning_rate = 5e-3;
  cfg.train.pi_p = 0.1;  // rough prior; re-estimated after the first model
  cfg.train.seed = 7;

  AdaptResult r = adapt_dictionary(data.corpus, dict, cfg);
  check(r.report.iterations.size() <= 5, "too many iterations");
  std::size_t prev = dict.size();
  for (const AdaptIteration& it : r.report.iterations) {
    check(it.dict_size >= prev, "dictionary shrank");
    prev = it.dict_size;
  }

  std::vector<std::vector<PredSpan>> pred(data.corpus.sentences.size());
  for (std::size_t si = 0; si < data.corpus.sentences.size(); ++si) {
    ForwardTrace tr = encode_sentence(data.corpus.sentences[si], r.params);
    Matrix m(1, tr.scores.size());
    for (std::size_t t = 0; t < tr.scores.size(); ++t) m.at(0, t) = tr.scores[t];
    pred[si] = decode_spans(resolve_conflicts(m, 0.5), m, {"PER"});
  }
  F1Report model_f1 = entity_f1(data.corpus, pred);

  check(model_f1.overall.recall() > match_f1.overall.recall(),
        "recall " + fmt(model_f1.overall.recall()) +
            " does not exceed matching recall " + fmt(match_f1.overall.recall()));
  double gap = 100.0 * (model_f1.overall.f1() - match_f1.overall.f1());
  check(gap >= 10.0, "F1 gap " + fmt(gap) + " points < 10");

  std::cout << "    [matching F1 " << 100.0 * match_f1.overall.f1()
            << ", adapted F1 " << 100.0 * model_f1.overall.f1() << ", gap "
            << gap << " points]\n";

  std::size_t gold_tokens = 0, total_tokens = 0;
  for (const Sentence& s : data.corpus.sentences) {
    total_tokens += s.tokens.size();
    for (const GoldSpan& g : *s.gold) gold_tokens += g.end - g.start + 1;
  }
  g_adapted = AdaptOutcome{std::move(data.corpus), std::move(r.params),
                         static_cast<double>(gold_tokens) / total_tokens};
}

void criterion_prior_estimation() {
  check(initial_prior("PER") == 0.04, "PER initial prior must be 0.04");
  check(initial_prior("LOC") == 0.04, "LOC initial prior must be 0.04");
  check(initial_prior("ORG") == 0.05, "ORG initial prior must be 0.05");
  check(initial_prior("MISC") == 0.03, "MISC initial prior must be 0.03");

  check(g_adapted.has_value(), "depends on the end-to-end criterion");
  std::vector<std::pair<std::string, const ModelParams*>> refs{
      {"PER", &g_adapted->params}};
  auto est = estimate_prior(g_adapted->corpus, refs, 0.5);
  double pi_hat = est.at("PER").clamped;
  double rel = std::fabs(pi_hat - g_adapted->true_pi) / g_adapted->true_pi;
  check(rel <= 0.20, "pi_hat " + fmt(pi_hat) + " vs true " +
                         fmt(g_adapted->true_pi) + ": relative error " + fmt(rel));
  std::cout << "    [pi_hat " << pi_hat << ", true " << g_adapted->true_pi
            << ", relative error " << rel << "]\n";
}

// ---------------------------------------------------------------------------
// 11. Entity-level F1 oracle values

void criterion_entity_f1() {
  auto sent = [](std::size_t len, std::vector<GoldSpan> gold) {
    Sentence s;
    for (std::size_t i = 0; i < len; ++i) s.tokens.emplace_back("w" + std::to_string(i));
    s.gold = std::move(gold);
    return s;
  };
  {
    Corpus gold;
    gold.sentences.push_back(sent(4, {{1, 2, "PER"}}));
    F1Report r = entity_f1(gold, {{PredSpan{1, 2, "PER", 1.0}}});
    check(r.overall.f1() == 1.0, "exact match should give F1 1.0");
  }
  {
    Corpus gold;
    gold.sentences.push_back(sent(4, {{1, 2, "PER"}}));
    F1Report r = entity_f1(gold, {{PredSpan{1, 1, "PER", 1.0}}});
    check(r.overall.f1() == 0.0, "boundary mismatch should give F1 0.0");
    check(r.per_type.at("PER").fp == 1 && r.per_type.at("PER").fn == 1,
          "expected fp=1, fn=1");
  }
  {
    Corpus gold;
    gold.sentences.push_back(sent(8, {{0, 0, "A"}, {2, 2, "A"}, {4, 4, "B"}}));
    F1Report r = entity_f1(gold, {{PredSpan{0, 0, "A", 1.0},
                                   PredSpan{4, 4, "B", 1.0},
                                   PredSpan{6, 6, "B", 1.0}}});
    check(std::fabs(r.overall.f1() - 2.0 / 3.0) < 1e-12,
          "micro F1 should be 2/3, got " + fmt(r.overall.f1()));
  }
}

// ---------------------------------------------------------------------------
// 12. CoNLL round trip

void criterion_round_trip() {
  static const char* kWords[] = {"alpha", "Beta", "gamma", "DELTA", "e5"};
  static const char* kTypes[] = {"PER", "LOC", "ORG"};
  Rng rng(1212);
  std::string path = "/tmp/puner_acceptance_rt.conll";
  for (int rep = 0; rep < 100; ++rep) {
    Corpus c;
    std::vector<std::vector<GoldSpan>> spans;
    std::size_t n_sent = 1 + rng.index(5);
    for (std::size_t si = 0; si < n_sent; ++si) {
      Sentence s;
      std::size_t len = 1 + rng.index(10);
      for (std::size_t t = 0; t < len; ++t) {
        s.tokens.emplace_back(kWords[rng.index(std::size(kWords))]);
      }
      std::vector<GoldSpan> ss;
      std::size_t t = 0;
      while (t < len) {
        if (rng.uniform() < 0.3) {
          std::size_t end = std::min(len - 1, t + rng.index(3));
          ss.push_back(GoldSpan{t, end, kTypes[rng.index(std::size(kTypes))]});
          t = end + 2;
        } else {
          ++t;
        }
      }
      spans.push_back(ss);
      c.sentences.push_back(std::move(s));
    }
    for (TagScheme scheme : {TagScheme::Bio, TagScheme::Bioes}) {
      write_conll(c, spans, scheme, path);
      Corpus back = read_conll(path, -1, scheme);
      check(back.sentences.size() == c.sentences.size(), "sentence count changed");
      for (std::size_t si = 0; si < c.sentences.size(); ++si) {
        check(back.sentences[si].tokens.size() == c.sentences[si].tokens.size(),
              "token count changed");
        for (std::size_t t = 0; t < c.sentences[si].tokens.size(); ++t) {
          check(back.sentences[si].tokens[t].surface ==
                    c.sentences[si].tokens[t].surface,
                "token changed");
        }
        std::vector<GoldSpan> expect = spans[si];
        std::sort(expect.begin(), expect.end());
        std::vector<GoldSpan> got = *back.sentences[si].gold;
        std::sort(got.begin(), got.end());
        check(got == expect, "spans changed in round trip");
      }
    }
  }
  std::remove(path.c_str());
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "figure-1 dictionary labeling", criterion_figure1},
      {2, "maximum-matching oracle equivalence", criterion_matching_oracle},
      {3, "risk formula oracles", criterion_formula_oracles},
      {4, "full-model gradient check", criterion_gradient_check},
      {5, "uPU unbiasedness", criterion_unbiasedness},
      {6, "sqrt(n) consistency trend", criterion_consistency},
      {7, "unbounded-loss divergence", criterion_divergence},
      {8, "span decoding and conflicts", criterion_decoding},
      {9, "end-to-end synthetic NER", criterion_end_to_end},
      {10, "class-prior estimation", criterion_prior_estimation},
      {11, "entity-level F1 oracle", criterion_entity_f1},
      {12, "CoNLL round trip", criterion_round_trip},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.run();
    } catch (const CheckFailure& f) {
      error = f.message;
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (error.empty()) {
      std::printf("PASS %2d %-38s (%.2fs)\n", c.id, c.name, secs);
    } else {
      std::printf("FAIL %2d %-38s (%.2fs): %s\n", c.id, c.name, secs,
                  error.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}

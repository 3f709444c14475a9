#include <cmath>
#include <random>

#include "doctest.h"
#include "sllda/eval.hpp"
#include "sllda/model.hpp"
#include "test_support.hpp"

using namespace sllda;
using testsup::TempDir;

namespace {

// Two labels over disjoint vocabularies plus mild noise.
Corpus separable_train(std::mt19937_64& rng, int docs_per_label = 20) {
  std::vector<testsup::DocSpec> docs;
  for (int i = 0; i < docs_per_label; ++i) {
    for (LabelId l = 0; l < 2; ++l) {
      testsup::DocSpec spec;
      const FeatureId base = l == 0 ? 0 : 3;
      spec.features = {{base, 2.0 + static_cast<double>(rng() % 3)},
                       {static_cast<FeatureId>(base + 1), 1.0}};
      spec.labels = {l};
      docs.push_back(std::move(spec));
    }
  }
  return testsup::make_corpus(6, 2, std::move(docs));
}

Hyperparameters quick_schedule(std::int32_t num_labels, double alpha_sum = 50.0,
                               double beta = 0.01) {
  Hyperparameters hp;
  hp.alpha.assign(static_cast<std::size_t>(num_labels),
                  alpha_sum / static_cast<double>(num_labels));
  hp.beta = beta;
  hp.iterations = 60;
  hp.burn_in = 20;
  hp.lag = 2;
  return hp;
}

PredictionConfig quick_config(Method method, std::uint64_t seed) {
  PredictionConfig cfg = default_prediction_config(method);
  cfg.schedule.iterations = 60;
  cfg.schedule.burn_in = 20;
  cfg.schedule.lag = 2;
  cfg.seed = seed;
  return cfg;
}

void check_score_invariants(const ScoreMatrix& scores) {
  for (const DocScores& doc : scores.docs) {
    double sum = 0.0;
    for (std::size_t i = 0; i < doc.ranked.size(); ++i) {
      const auto& [label, score] = doc.ranked[i];
      CHECK(score > 0.0);
      CHECK(score <= 1.0);
      sum += score;
      if (i > 0) {
        const auto& [prev_label, prev_score] = doc.ranked[i - 1];
        CHECK(prev_score >= score);
        if (prev_score == score) CHECK(prev_label < label);
      }
    }
    CHECK(sum <= 1.0 + 1e-6);
  }
}

}  // namespace

TEST_CASE("training concentrates labels on their vocabulary") {
  std::mt19937_64 rng(41);
  const Corpus train = separable_train(rng);
  const Hyperparameters hp = quick_schedule(2, 50.0, 1e-6);
  const TrainedModel model = train_llda(train, hp, 7);

  CHECK(model.num_samples == hp.retained_samples());
  const PhiMatrix phi = model.phi();
  double mass0 = 0.0, mass1 = 0.0;
  for (FeatureId v = 0; v < 3; ++v) mass0 += phi(v, 0);
  for (FeatureId v = 3; v < 6; ++v) mass1 += phi(v, 1);
  CHECK(mass0 > 0.99);
  CHECK(mass1 > 0.99);
}

TEST_CASE("prediction separates documents by vocabulary") {
  std::mt19937_64 rng(43);
  const Corpus train = separable_train(rng);
  const TrainedModel model = train_llda(train, quick_schedule(2), 7);

  const Corpus test = testsup::make_corpus(
      6, 2, {{{{0, 3.0}, {1, 1.0}}, {}}, {{{3, 2.0}, {4, 2.0}}, {}}});
  const ScoreMatrix scores =
      predict_llda(model, test, quick_config(Method::kLlda, 11));
  check_score_invariants(scores);
  CHECK(scores.docs[0].ranked[0].first == 0);
  CHECK(scores.docs[1].ranked[0].first == 1);
}

TEST_CASE("zero-token documents rank by the prior") {
  std::mt19937_64 rng(47);
  const Corpus train = separable_train(rng);
  const TrainedModel model = train_llda(train, quick_schedule(2), 7);
  const Corpus test = testsup::make_corpus(6, 2, {{{}, {}}});

  SUBCASE("symmetric prior ties break by ascending label id") {
    const ScoreMatrix scores =
        predict_llda(model, test, quick_config(Method::kLlda, 3));
    REQUIRE(scores.docs[0].ranked.size() == 2);
    CHECK(scores.docs[0].ranked[0].first == 0);
    CHECK(scores.docs[0].ranked[1].first == 1);
    CHECK(scores.docs[0].ranked[0].second ==
          doctest::Approx(scores.docs[0].ranked[1].second));
  }
  SUBCASE("frequency prior ranks by label frequency") {
    TrainedModel skewed = model;
    skewed.label_frequencies = {0.2, 0.9};
    const ScoreMatrix scores =
        predict_prior(skewed, test, quick_config(Method::kPrior, 3));
    CHECK(scores.docs[0].ranked[0].first == 1);
  }
}

TEST_CASE("prior_alpha") {
  CHECK(prior_alpha({0.0}, 50.0, 0.19)[0] == doctest::Approx(0.19));
  CHECK(prior_alpha({0.1}, 50.0, 0.3)[0] == doctest::Approx(5.3));
  const std::vector<double> freq = {0.1, 0.2, 0.5, 0.9};
  const std::vector<double> alpha = prior_alpha(freq, 7.0, 0.4);
  for (std::size_t i = 1; i < alpha.size(); ++i) {
    CHECK(alpha[i] > alpha[i - 1]);
  }
}

TEST_CASE("dep_alpha") {
  PhiMatrix aux_phi(2, 2);  // two labels x two topics, label-major
  aux_phi.at(0, 0) = 0.7;
  aux_phi.at(1, 0) = 0.3;
  aux_phi.at(0, 1) = 0.4;
  aux_phi.at(1, 1) = 0.6;

  SUBCASE("degenerate topic mixture") {
    const std::vector<double> theta_prime = {1.0, 0.0};
    const std::vector<double> alpha = dep_alpha(theta_prime, aux_phi, 10.0, 0.5);
    REQUIRE(alpha.size() == 2);
    CHECK(alpha[0] == doctest::Approx(7.5));
    CHECK(alpha[1] == doctest::Approx(3.5));
  }
  SUBCASE("uniform mixture over identical topics is symmetric") {
    PhiMatrix same(2, 2);
    same.at(0, 0) = same.at(0, 1) = 0.25;
    same.at(1, 0) = same.at(1, 1) = 0.75;
    const std::vector<double> theta_prime = {0.5, 0.5};
    const std::vector<double> alpha = dep_alpha(theta_prime, same, 8.0, 0.2);
    CHECK(alpha[0] == doctest::Approx(8.0 * 0.25 + 0.2));
    CHECK(alpha[1] == doctest::Approx(8.0 * 0.75 + 0.2));
  }
  SUBCASE("excess mass above the base sums to eta") {
    const std::vector<double> theta_prime = {0.3, 0.7};
    const std::vector<double> alpha = dep_alpha(theta_prime, aux_phi, 12.0, 0.1);
    double excess = 0.0;
    for (double a : alpha) excess += a - 0.1;
    CHECK(excess == doctest::Approx(12.0).epsilon(1e-9));
  }
  SUBCASE("dimension mismatch is rejected") {
    const std::vector<double> theta_prime = {1.0};
    CHECK_THROWS_AS(dep_alpha(theta_prime, aux_phi, 1.0, 0.1), ContractError);
  }
}

TEST_CASE("auxiliary model over label pseudo-documents") {
  SUBCASE("single topic collapses to the smoothed label distribution") {
    const Corpus train = testsup::make_corpus(
        2, 3,
        {{{{0, 1.0}}, {0}}, {{{0, 1.0}}, {0, 1}}, {{{1, 1.0}}, {1, 2}}});
    Hyperparameters schedule = quick_schedule(1);
    schedule.alpha = {0.1};
    schedule.beta = 0.01;
    const DepAuxModel aux = train_dep_aux(train, 1, schedule, 5);
    const PhiMatrix phi = aux.phi();
    // label token counts: 2, 2, 1; smoothing beta=0.01 over 3 labels
    const double denom = 5.0 + 3.0 * 0.01;
    CHECK(phi(0, 0) == doctest::Approx((2.0 + 0.01) / denom));
    CHECK(phi(1, 0) == doctest::Approx((2.0 + 0.01) / denom));
    CHECK(phi(2, 0) == doctest::Approx((1.0 + 0.01) / denom));
  }
  SUBCASE("paired labels end up in a shared topic") {
    std::vector<testsup::DocSpec> docs;
    for (int i = 0; i < 30; ++i) {
      testsup::DocSpec spec;
      spec.features = {{0, 1.0}};
      spec.labels = (i % 2 == 0) ? std::vector<LabelId>{0, 1}
                                 : std::vector<LabelId>{2, 3};
      docs.push_back(std::move(spec));
    }
    const Corpus train = testsup::make_corpus(1, 4, std::move(docs));
    Hyperparameters schedule;
    schedule.alpha = {0.1, 0.1};
    schedule.beta = 0.01;
    schedule.iterations = 100;
    schedule.burn_in = 20;
    schedule.lag = 5;
    const DepAuxModel aux = train_dep_aux(train, 2, schedule, 17);
    const PhiMatrix phi = aux.phi();
    bool pair01 = false, pair23 = false;
    for (LabelId t = 0; t < 2; ++t) {
      if (phi(0, t) >= 0.4 && phi(1, t) >= 0.4) pair01 = true;
      if (phi(2, t) >= 0.4 && phi(3, t) >= 0.4) pair23 = true;
    }
    CHECK(pair01);
    CHECK(pair23);
  }
  SUBCASE("topic rows are normalized") {
    std::mt19937_64 rng(3);
    const Corpus train = testsup::random_corpus(rng, 25, 4, 8, 3, 4);
    const DepAuxModel aux = train_dep_aux(train, 3, quick_schedule(3), 5);
    const PhiMatrix phi = aux.phi();
    for (LabelId t = 0; t < 3; ++t) {
      double sum = 0.0;
      for (FeatureId l = 0; l < 8; ++l) sum += phi(l, t);
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("subset prediction") {
  std::mt19937_64 rng(53);
  const Corpus train = separable_train(rng);
  const TrainedModel model = train_llda(train, quick_schedule(2), 7);
  const Corpus test = testsup::make_corpus(
      6, 2, {{{{0, 2.0}, {1, 1.0}}, {}}, {{{3, 1.0}}, {}}});

  SUBCASE("singleton candidate sets give probability one") {
    const std::vector<std::vector<LabelId>> candidates = {{1}, {0}};
    const ScoreMatrix scores = predict_with_candidates(
        model, test, candidates, quick_config(Method::kSubset, 5));
    REQUIRE(scores.docs[0].ranked.size() == 1);
    CHECK(scores.docs[0].ranked[0].first == 1);
    CHECK(scores.docs[0].ranked[0].second == doctest::Approx(1.0));
    CHECK(scores.docs[0].candidates == std::vector<LabelId>{1});
  }
  SUBCASE("full candidate sets reproduce unrestricted prediction exactly") {
    TempDir tmp;
    const std::vector<std::vector<LabelId>> all(test.size(), {0, 1});
    const ScoreMatrix via_subset = predict_with_candidates(
        model, test, all, quick_config(Method::kSubset, 5));
    const ScoreMatrix via_llda =
        predict_llda(model, test, quick_config(Method::kLlda, 5));
    write_scores(via_subset, tmp.file("subset.txt"));
    write_scores(via_llda, tmp.file("llda.txt"));
    CHECK(testsup::read_file(tmp.file("subset.txt")) ==
          testsup::read_file(tmp.file("llda.txt")));
  }
  SUBCASE("retrieval-backed subset restricts the ranking") {
    const TfIdfIndex index = TfIdfIndex::build(train);
    PredictionConfig cfg = quick_config(Method::kSubset, 5);
    cfg.neighbors = 3;
    const ScoreMatrix scores = predict_subset(model, test, index, train, cfg);
    check_score_invariants(scores);
    for (const DocScores& doc : scores.docs) {
      CHECK(doc.ranked.size() == doc.candidates.size());
    }
    CHECK(scores.docs[1].ranked[0].first == 1);
  }
}

TEST_CASE("frequency prior with uniform frequencies matches the flat prior") {
  // every document carries both labels, so f = (1, 1)
  const Corpus train = testsup::make_corpus(
      4, 2,
      {{{{0, 2.0}, {1, 1.0}}, {0, 1}},
       {{{2, 2.0}}, {0, 1}},
       {{{1, 1.0}, {3, 1.0}}, {0, 1}}});
  const TrainedModel model = train_llda(train, quick_schedule(2), 19);
  const Corpus test =
      testsup::make_corpus(4, 2, {{{{0, 1.0}, {2, 1.0}}, {}}});

  PredictionConfig prior_cfg = quick_config(Method::kPrior, 23);
  prior_cfg.eta = 50.0;
  prior_cfg.alpha_sum = 30.0;  // alpha_l = 50*1 + 15
  PredictionConfig llda_cfg = quick_config(Method::kLlda, 23);
  llda_cfg.alpha_sum = 2.0 * (50.0 + 15.0);

  TempDir tmp;
  write_scores(predict_prior(model, test, prior_cfg), tmp.file("prior.txt"));
  write_scores(predict_llda(model, test, llda_cfg), tmp.file("llda.txt"));
  CHECK(testsup::read_file(tmp.file("prior.txt")) ==
        testsup::read_file(tmp.file("llda.txt")));
}

TEST_CASE("single-topic dependency prior collapses to a frequency prior") {
  std::mt19937_64 rng(59);
  const Corpus train = separable_train(rng);
  const TrainedModel model = train_llda(train, quick_schedule(2), 7);
  Hyperparameters aux_schedule = quick_schedule(1);
  aux_schedule.alpha = {0.1};
  const DepAuxModel aux = train_dep_aux(train, 1, aux_schedule, 7);

  const Corpus test = testsup::make_corpus(
      6, 2, {{{{0, 2.0}}, {}}, {{{4, 1.0}, {5, 1.0}}, {}}});

  PredictionConfig dep_cfg = quick_config(Method::kDep, 29);
  dep_cfg.eta = 120.0;

  // Frequency-prior run with f replaced by the aux model's single topic row.
  const PhiMatrix aux_phi = aux.phi();
  TrainedModel surrogate = model;
  for (LabelId l = 0; l < 2; ++l) {
    surrogate.label_frequencies[static_cast<std::size_t>(l)] = aux_phi(l, 0);
  }
  PredictionConfig prior_cfg = quick_config(Method::kPrior, 29);
  prior_cfg.eta = 120.0;

  TempDir tmp;
  write_scores(predict_dep(model, aux, test, dep_cfg), tmp.file("dep.txt"));
  write_scores(predict_prior(surrogate, test, prior_cfg),
               tmp.file("prior.txt"));
  CHECK(testsup::read_file(tmp.file("dep.txt")) ==
        testsup::read_file(tmp.file("prior.txt")));
}

TEST_CASE("predictions are deterministic and thread-invariant") {
  std::mt19937_64 rng(61);
  const Corpus train = testsup::random_corpus(rng, 30, 12, 6, 5, 3);
  const TrainedModel model = train_llda(train, quick_schedule(6), 3);
  const Corpus test = testsup::random_corpus(rng, 12, 12, 6, 5, 3);

  PredictionConfig cfg = quick_config(Method::kLlda, 99);
  const ScoreMatrix a = predict_llda(model, test, cfg);
  cfg.threads = 4;
  const ScoreMatrix b = predict_llda(model, test, cfg);
  REQUIRE(a.docs.size() == b.docs.size());
  for (std::size_t m = 0; m < a.docs.size(); ++m) {
    CHECK(a.docs[m].ranked == b.docs[m].ranked);
  }
  check_score_invariants(a);
}

TEST_CASE("multi-chain prediction merges chain accumulators") {
  std::mt19937_64 rng(83);
  const Corpus train = testsup::random_corpus(rng, 25, 10, 5, 4, 2);
  const TrainedModel model = train_llda(train, quick_schedule(5), 3);
  Hyperparameters aux_schedule = quick_schedule(2);
  aux_schedule.alpha = {0.1, 0.1};
  const DepAuxModel aux = train_dep_aux(train, 2, aux_schedule, 3);
  const Corpus test = testsup::random_corpus(rng, 6, 10, 5, 4, 2);

  PredictionConfig cfg = quick_config(Method::kLlda, 17);
  cfg.schedule.chains = 2;
  const ScoreMatrix a = predict_llda(model, test, cfg);
  const ScoreMatrix b = predict_llda(model, test, cfg);
  check_score_invariants(a);
  for (std::size_t m = 0; m < a.docs.size(); ++m) {
    CHECK(a.docs[m].ranked == b.docs[m].ranked);
  }

  PredictionConfig dep_cfg = quick_config(Method::kDep, 17);
  dep_cfg.schedule.chains = 2;
  const ScoreMatrix d = predict_dep(model, aux, test, dep_cfg);
  check_score_invariants(d);
}

TEST_CASE("training chains merge expected counts") {
  std::mt19937_64 rng(67);
  const Corpus train = testsup::random_corpus(rng, 20, 8, 4, 4, 2);
  Hyperparameters hp = quick_schedule(4);
  hp.chains = 3;
  const TrainedModel model = train_llda(train, hp, 5);
  CHECK(model.num_samples == 3 * hp.retained_samples());
  const PhiMatrix phi = model.phi();
  for (LabelId l = 0; l < 4; ++l) {
    double sum = 0.0;
    for (FeatureId v = 0; v < 8; ++v) sum += phi(v, l);
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("model persistence") {
  std::mt19937_64 rng(71);
  const Corpus train = testsup::random_corpus(rng, 25, 10, 5, 4, 3);
  Hyperparameters hp = quick_schedule(5);
  hp.beta = 2.0;  // large smoothing keeps the save threshold effect tiny
  TrainedModel model = train_llda(train, hp, 13);
  // inject sub-threshold accumulator entries to exercise the lossy save
  model.acc_lv[3] = 5e-9;
  model.acc_lv[17] = 9.9e-9;

  TempDir tmp;
  const std::string dir = tmp.file("model");
  save_model(model, dir);

  SUBCASE("save -> load -> save is byte-identical") {
    const TrainedModel loaded = load_model(dir);
    const std::string dir2 = tmp.file("model2");
    save_model(loaded, dir2);
    CHECK(testsup::read_file(dir + "/meta") ==
          testsup::read_file(dir2 + "/meta"));
    CHECK(testsup::read_file(dir + "/counts") ==
          testsup::read_file(dir2 + "/counts"));
    CHECK(testsup::read_file(dir + "/freq") ==
          testsup::read_file(dir2 + "/freq"));
  }
  SUBCASE("loaded distributions match within the lossy threshold") {
    const TrainedModel loaded = load_model(dir);
    CHECK(loaded.num_samples == model.num_samples);
    CHECK(loaded.beta == model.beta);
    CHECK(loaded.train_alpha_sum == model.train_alpha_sum);
    CHECK(loaded.label_frequencies == model.label_frequencies);
    const PhiMatrix original = model.phi();
    const PhiMatrix reloaded = loaded.phi();
    for (LabelId l = 0; l < 5; ++l) {
      for (FeatureId v = 0; v < 10; ++v) {
        CHECK(std::abs(original(v, l) - reloaded(v, l)) < 1e-8);
      }
    }
  }
  SUBCASE("corrupted magic bytes are rejected") {
    std::string meta = testsup::read_file(dir + "/meta");
    meta[0] = 'X';
    testsup::write_file(dir + "/meta", meta);
    CHECK_THROWS_AS(load_model(dir), ModelFormatError);
  }
  SUBCASE("version mismatch is rejected") {
    std::string meta = testsup::read_file(dir + "/meta");
    const std::string needle = "version=1";
    meta.replace(meta.find(needle), needle.size(), "version=9");
    testsup::write_file(dir + "/meta", meta);
    CHECK_THROWS_AS(load_model(dir), ModelFormatError);
  }
  SUBCASE("checksum failure is rejected") {
    std::string counts = testsup::read_file(dir + "/counts");
    counts[counts.size() / 2] = '7';
    testsup::write_file(dir + "/counts", counts);
    CHECK_THROWS_AS(load_model(dir), ModelFormatError);
  }
  SUBCASE("missing directory raises an IO error") {
    CHECK_THROWS_AS(load_model(tmp.file("nothing")), IoError);
  }
}

TEST_CASE("auxiliary model persistence") {
  std::mt19937_64 rng(73);
  const Corpus train = testsup::random_corpus(rng, 6, 3, 6, 2, 3);
  Hyperparameters schedule = quick_schedule(2);
  schedule.alpha = {0.1, 0.1};
  const DepAuxModel aux = train_dep_aux(train, 2, schedule, 3);

  TempDir tmp;
  const std::string dir = tmp.file("model");
  std::filesystem::create_directories(dir);
  save_aux_model(aux, dir);
  const std::optional<DepAuxModel> loaded = load_aux_model(dir);
  REQUIRE(loaded.has_value());
  CHECK(loaded->num_topics == 2);
  CHECK(loaded->num_labels == 6);
  CHECK(loaded->num_samples == aux.num_samples);
  CHECK(load_aux_model(tmp.file("elsewhere")).has_value() == false);
}

TEST_CASE("score file round trip") {
  ScoreMatrix scores;
  DocScores d0;
  d0.doc_id = 0;
  d0.ranked = {{2, 0.75}, {0, 0.125}, {1, 0.125}};
  DocScores d1;
  d1.doc_id = 1;
  d1.ranked = {{1, 1.0}};
  scores.docs = {d0, d1};

  TempDir tmp;
  write_scores(scores, tmp.file("scores.txt"));
  CHECK(testsup::read_file(tmp.file("scores.txt")) ==
        "0\t2:0.750000 0:0.125000 1:0.125000\n1\t1:1.000000\n");
  const ScoreMatrix loaded = read_scores(tmp.file("scores.txt"));
  REQUIRE(loaded.docs.size() == 2);
  CHECK(loaded.docs[0].ranked.size() == 3);
  CHECK(loaded.docs[0].ranked[0].first == 2);
  CHECK(loaded.docs[0].ranked[0].second == doctest::Approx(0.75));
}

TEST_CASE("candidates file round trip") {
  std::vector<CandidateSet> sets(2);
  sets[0].test_doc_id = 0;
  sets[0].neighbors = {{4, 0.931}, {2, 0.5}};
  sets[0].labels = {1, 5, 9};
  sets[1].test_doc_id = 1;
  sets[1].labels = {0};
  sets[1].used_fallback = true;

  TempDir tmp;
  write_candidates(sets, tmp.file("cands.txt"));
  CHECK(testsup::read_file(tmp.file("cands.txt")) ==
        "0\t4:0.931000,2:0.500000\t1,5,9\n1\t\t0\n");
  const auto loaded = read_candidates(tmp.file("cands.txt"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].labels == std::vector<LabelId>{1, 5, 9});
  REQUIRE(loaded[0].neighbors.size() == 2);
  CHECK(loaded[0].neighbors[0].doc_id == 4);
  CHECK(loaded[1].neighbors.empty());
  CHECK(loaded[1].labels == std::vector<LabelId>{0});
}

TEST_CASE("five-run averaging reduces run-to-run spread") {
  std::mt19937_64 rng(79);
  const Corpus train = testsup::random_corpus(rng, 40, 10, 5, 4, 2);
  const TrainedModel model = train_llda(train, quick_schedule(5), 3);
  const Corpus test = testsup::random_corpus(rng, 15, 10, 5, 4, 2);
  const GoldLabels gold = gold_from_corpus(test);
  const PropensityModel prop = propensities(train);

  std::vector<double> micro;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    PredictionConfig cfg = quick_config(Method::kLlda, seed);
    const ScoreMatrix scores = predict_llda(model, test, cfg);
    const EvalReport report =
        evaluate_scores(scores, gold, train.cardinality, prop);
    micro.push_back(report.micro_f);
  }
  const auto stddev = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(xs.size()));
  };
  std::vector<double> averaged;
  for (std::size_t g = 0; g < 6; ++g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) sum += micro[g * 5 + i];
    averaged.push_back(sum / 5.0);
  }
  CHECK(stddev(averaged) <= stddev(micro));
}

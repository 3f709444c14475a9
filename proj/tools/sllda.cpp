#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sllda/corpus.hpp"
#include "sllda/eval.hpp"
#include "sllda/model.hpp"
#include "sllda/parallel.hpp"
#include "sllda/sampler.hpp"
#include "sllda/tfidf.hpp"

using namespace sllda;

namespace {

// Exit codes: 1 usage, 2 data, 3 internal.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

// Flag combinations that cannot be expressed as CLI11 constraints.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log_line(const std::string& line) { std::cerr << line << "\n"; }

std::string kv(const std::string& key, const std::string& value) {
  return key + "=" + value;
}
std::string kv(const std::string& key, double value) {
  return key + "=" + format_double(value);
}
template <typename Int>
std::string kv_int(const std::string& key, Int value) {
  return key + "=" + std::to_string(value);
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct TrainArgs {
  std::string train_path;
  std::string model_dir;
  int iterations = 200;
  int burn_in = 50;
  int lag = 5;
  int chains = 1;
  double alpha_sum = 50.0;
  double beta = 0.01;
  bool with_aux = false;
  int topics = 100;
  double aux_alpha = 0.1;
  double aux_beta = 0.01;
  std::int64_t max_tokens = 1000;
  std::uint64_t seed = 42;
};

int cmd_train(const TrainArgs& args) {
  LoadOptions options;
  options.max_tokens_per_feature = args.max_tokens;
  const Corpus train = load_corpus(args.train_path, CorpusRole::kTrain, options);
  const CorpusStats stats = corpus_stats(train);
  log_line(kv("event", "corpus_loaded") + " " +
           kv_int("docs", stats.num_documents) + " " +
           kv_int("features", stats.num_features) + " " +
           kv_int("labels", stats.num_labels) + " " +
           kv_int("tokens", stats.total_tokens) + " " +
           kv("cardinality", stats.cardinality) + " " +
           kv("avg_label_frequency", stats.avg_label_frequency) + " " +
           kv_int("dropped_empty", train.dropped_empty_label_docs));

  Hyperparameters hp = default_train_schedule(train.num_labels);
  hp.alpha.assign(static_cast<std::size_t>(train.num_labels),
                  args.alpha_sum / static_cast<double>(train.num_labels));
  hp.beta = args.beta;
  hp.iterations = args.iterations;
  hp.burn_in = args.burn_in;
  hp.lag = args.lag;
  hp.chains = args.chains;
  hp.validate(static_cast<std::size_t>(train.num_labels));

  const double start = now_seconds();
  const TrainedModel model =
      train_llda(train, hp, args.seed, [&](int iteration, double seconds) {
        log_line(kv("event", "sweep") + " " + kv_int("iteration", iteration) +
                 " " + kv("seconds", seconds));
      });
  save_model(model, args.model_dir);
  log_line(kv("event", "model_saved") + " " + kv("dir", args.model_dir) + " " +
           kv_int("samples_retained", model.num_samples) + " " +
           kv("seconds", now_seconds() - start));

  if (args.with_aux) {
    Hyperparameters aux_hp;
    aux_hp.alpha.assign(static_cast<std::size_t>(args.topics), args.aux_alpha);
    aux_hp.beta = args.aux_beta;
    aux_hp.iterations = args.iterations;
    aux_hp.burn_in = args.burn_in;
    aux_hp.lag = args.lag;
    aux_hp.chains = args.chains;
    const double aux_start = now_seconds();
    const DepAuxModel aux =
        train_dep_aux(train, args.topics, aux_hp, args.seed);
    save_aux_model(aux, args.model_dir);
    log_line(kv("event", "aux_saved") + " " + kv_int("topics", args.topics) +
             " " + kv_int("samples_retained", aux.num_samples) + " " +
             kv("seconds", now_seconds() - aux_start));
  }
  return 0;
}

struct RetrieveArgs {
  std::string train_path;
  std::string test_path;
  std::string out_path;
  int neighbors = 10;
  std::int64_t max_tokens = 1000;
  int threads = 1;
};

int cmd_retrieve(const RetrieveArgs& args) {
  LoadOptions load_options;
  load_options.max_tokens_per_feature = args.max_tokens;
  const Corpus train =
      load_corpus(args.train_path, CorpusRole::kTrain, load_options);
  const Corpus test =
      load_corpus(args.test_path, CorpusRole::kTest, load_options);
  const double start = now_seconds();
  const TfIdfIndex index = TfIdfIndex::build(train);
  std::vector<CandidateSet> candidates(test.size());
  run_parallel(test.size(), args.threads, [&](std::size_t m) {
    candidates[m] =
        candidate_labels(index, train, test.documents[m], args.neighbors);
  });
  write_candidates(candidates, args.out_path);

  double mean_size = 0.0;
  std::int64_t fallbacks = 0;
  for (const CandidateSet& cs : candidates) {
    mean_size += static_cast<double>(cs.labels.size());
    fallbacks += cs.used_fallback ? 1 : 0;
  }
  if (!candidates.empty()) mean_size /= static_cast<double>(candidates.size());
  log_line(kv("event", "retrieved") + " " + kv_int("docs", test.size()) + " " +
           kv_int("neighbors", args.neighbors) + " " +
           kv("mean_candidates", mean_size) + " " +
           kv_int("fallbacks", fallbacks) + " " +
           kv("seconds", now_seconds() - start));
  return 0;
}

struct PredictArgs {
  std::string model_dir;
  std::string test_path;
  std::string method = "llda";
  std::string out_path;
  std::string train_path;
  std::string candidates_path;
  int neighbors = 10;
  double alpha_sum = 30.0;
  double eta = -1.0;   // method default when negative
  double beta = -1.0;  // model value when negative
  int iterations = 200;
  int burn_in = 50;
  int lag = 5;
  int chains = 1;
  int inner_sweeps = 5;
  std::int64_t max_tokens = 1000;
  std::uint64_t seed = 42;
  int threads = 1;
};

int cmd_predict(const PredictArgs& args) {
  const auto method = parse_method(args.method);
  if (!method) throw UsageError("unknown method '" + args.method + "'");

  TrainedModel model = load_model(args.model_dir);
  if (args.beta > 0.0) model.beta = args.beta;
  LoadOptions load_options;
  load_options.max_tokens_per_feature = args.max_tokens;
  const Corpus test =
      load_corpus(args.test_path, CorpusRole::kTest, load_options);

  PredictionConfig cfg = default_prediction_config(*method);
  cfg.alpha_sum = args.alpha_sum;
  if (args.eta > 0.0) cfg.eta = args.eta;
  cfg.neighbors = args.neighbors;
  cfg.dep_inner_sweeps = args.inner_sweeps;
  cfg.schedule.iterations = args.iterations;
  cfg.schedule.burn_in = args.burn_in;
  cfg.schedule.lag = args.lag;
  cfg.schedule.chains = args.chains;
  cfg.seed = args.seed;
  cfg.threads = args.threads;

  const double start = now_seconds();
  ScoreMatrix scores;
  switch (*method) {
    case Method::kLlda:
      scores = predict_llda(model, test, cfg);
      break;
    case Method::kPrior:
      scores = predict_prior(model, test, cfg);
      break;
    case Method::kDep: {
      const std::optional<DepAuxModel> aux = load_aux_model(args.model_dir);
      if (!aux) {
        throw UsageError(
            "method 'dep' needs an auxiliary model; train with --aux");
      }
      scores = predict_dep(model, *aux, test, cfg);
      break;
    }
    case Method::kSubset: {
      if (args.candidates_path == "all") {
        std::vector<LabelId> all(static_cast<std::size_t>(model.num_labels));
        std::iota(all.begin(), all.end(), 0);
        const std::vector<std::vector<LabelId>> candidates(test.size(), all);
        scores = predict_with_candidates(model, test, candidates, cfg);
      } else if (!args.candidates_path.empty()) {
        const std::vector<CandidateSet> sets =
            read_candidates(args.candidates_path);
        if (sets.size() != test.size()) {
          throw ValueError("candidates file covers " +
                           std::to_string(sets.size()) + " documents, test has " +
                           std::to_string(test.size()));
        }
        std::vector<std::vector<LabelId>> candidates(sets.size());
        for (std::size_t m = 0; m < sets.size(); ++m) {
          candidates[m] = sets[m].labels;
        }
        scores = predict_with_candidates(model, test, candidates, cfg);
      } else if (!args.train_path.empty()) {
        const Corpus train =
            load_corpus(args.train_path, CorpusRole::kTrain, load_options);
        const TfIdfIndex index = TfIdfIndex::build(train);
        scores = predict_subset(model, test, index, train, cfg);
      } else {
        throw UsageError(
            "method 'subset' needs --train or --candidates (file or 'all')");
      }
      break;
    }
  }
  write_scores(scores, args.out_path);

  if (*method == Method::kSubset) {
    double mean_size = 0.0;
    for (const DocScores& doc : scores.docs) {
      log_line(kv("event", "candidates") + " " + kv_int("doc", doc.doc_id) +
               " " + kv_int("size", doc.candidates.size()));
      mean_size += static_cast<double>(doc.candidates.size());
    }
    if (!scores.docs.empty()) {
      mean_size /= static_cast<double>(scores.docs.size());
    }
    log_line(kv("mean_candidates", mean_size));
  }
  log_line(kv("event", "predicted") + " " + kv("method", args.method) + " " +
           kv_int("docs", scores.docs.size()) + " " +
           kv("seconds", now_seconds() - start));
  return 0;
}

struct EvaluateArgs {
  std::string scores_path;
  std::string gold_path;
  std::string train_path;
  std::string compare_path;
  std::string ks = "1,5";
  std::string micro_variant = "pooled";
  std::string format = "text";
  double rcut_t = -1.0;
  double propensity_a = 0.55;
  double propensity_b = 1.5;
  bool unit_propensity = false;
  bool include_empty_gold = false;
  double level = 0.05;
};

std::vector<int> parse_ks(const std::string& spec) {
  std::vector<int> ks;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int k;
    if (!parse_int(item, k) || k < 1) {
      throw UsageError("bad k list '" + spec + "'");
    }
    ks.push_back(k);
  }
  if (ks.empty()) throw UsageError("empty k list");
  return ks;
}

void check_score_labels(const ScoreMatrix& scores, std::int32_t num_labels) {
  for (const DocScores& doc : scores.docs) {
    for (const auto& [label, score] : doc.ranked) {
      if (label < 0 || label >= num_labels) {
        throw ValueError("score file references label " +
                         std::to_string(label) + ", gold data has " +
                         std::to_string(num_labels) + " labels");
      }
    }
  }
}

void print_report_text(const EvalReport& report, const std::string& name) {
  std::printf("== evaluation%s ==\n",
              name.empty() ? "" : (" (" + name + ")").c_str());
  std::printf("documents:   %lld evaluated of %lld\n",
              static_cast<long long>(report.docs_evaluated),
              static_cast<long long>(report.docs_total));
  std::printf("rcut t:      %d\n", report.rcut_t);
  std::printf("micro-F:     %.6f\n", report.micro_f);
  std::printf("macro-F:     %.6f\n", report.macro_f);
  for (const auto& [k, value] : report.precision) {
    std::printf("P@%d:         %.6f\n", k, value);
  }
  for (const auto& [k, value] : report.ps_precision) {
    std::printf("PSP@%d:       %.6f\n", k, value);
  }
}

void print_report_kv(const EvalReport& report) {
  std::printf("micro_f=%.6f\n", report.micro_f);
  std::printf("macro_f=%.6f\n", report.macro_f);
  for (const auto& [k, value] : report.precision) {
    std::printf("p@%d=%.6f\n", k, value);
  }
  for (const auto& [k, value] : report.ps_precision) {
    std::printf("psp@%d=%.6f\n", k, value);
  }
  std::printf("rcut_t=%d\n", report.rcut_t);
}

int cmd_evaluate(const EvaluateArgs& args) {
  const Corpus gold_corpus = load_corpus(args.gold_path, CorpusRole::kTest);
  const GoldLabels gold = gold_from_corpus(gold_corpus);
  const ScoreMatrix scores = read_scores(args.scores_path);
  if (scores.docs.size() != gold.docs.size()) {
    throw ValueError("score file has " + std::to_string(scores.docs.size()) +
                     " documents, gold data has " +
                     std::to_string(gold.docs.size()));
  }
  check_score_labels(scores, gold.num_labels);

  double cardinality = args.rcut_t;
  PropensityModel prop = PropensityModel::uniform(gold.num_labels);
  if (!args.train_path.empty()) {
    const Corpus train = load_corpus(args.train_path, CorpusRole::kTrain);
    if (train.num_labels != gold.num_labels) {
      throw ValueError("train and gold label counts differ");
    }
    if (cardinality <= 0.0) cardinality = train.cardinality;
    if (!args.unit_propensity) {
      prop = propensities(train, args.propensity_a, args.propensity_b);
    }
  }
  if (cardinality <= 0.0) {
    throw UsageError("need --train or --rcut-t for the rcut threshold");
  }

  EvalConfig config;
  config.ks = parse_ks(args.ks);
  config.include_empty_gold = args.include_empty_gold;
  if (args.micro_variant == "pooled") {
    config.micro_variant = MicroVariant::kPooled;
  } else if (args.micro_variant == "weighted") {
    config.micro_variant = MicroVariant::kWeighted;
  } else {
    throw UsageError("unknown micro variant '" + args.micro_variant + "'");
  }

  const EvalReport report =
      evaluate_scores(scores, gold, cardinality, prop, config);
  if (args.format == "text" || args.format == "both") {
    print_report_text(report, "");
  }
  if (args.format == "kv" || args.format == "both") {
    print_report_kv(report);
  }
  if (args.format != "text" && args.format != "kv" && args.format != "both") {
    throw UsageError("unknown format '" + args.format + "'");
  }

  if (!args.compare_path.empty()) {
    const ScoreMatrix other = read_scores(args.compare_path);
    if (other.docs.size() != gold.docs.size()) {
      throw ValueError("comparison score file document count mismatch");
    }
    check_score_labels(other, gold.num_labels);
    const EvalReport other_report =
        evaluate_scores(other, gold, cardinality, prop, config);
    if (args.format == "text" || args.format == "both") {
      print_report_text(other_report, "comparison");
    }
    for (const auto& [measure, indicator] : report.indicators) {
      const auto it = other_report.indicators.find(measure);
      if (it == other_report.indicators.end()) continue;
      const ZTestResult z = z_test(indicator, it->second, args.level);
      const char* verdict = z.verdict == Significance::kSignificant
                                ? "significant"
                                : (z.verdict == Significance::kNotSignificant
                                       ? "not_significant"
                                       : "undefined");
      std::printf("ztest.%s.z=%.6f\n", measure.c_str(), z.z);
      std::printf("ztest.%s.p=%.6f\n", measure.c_str(), z.p_value);
      std::printf("ztest.%s.verdict=%s\n", measure.c_str(), verdict);
    }
  }
  return 0;
}

struct ReproduceArgs {
  std::string dataset;
  std::string workdir;
  int runs = 5;
  std::uint64_t seed = 42;
  int threads = 1;
  int iterations = 200;
  int burn_in = 50;
  int lag = 5;
  int topics = 100;
  int neighbors = 10;
  std::string format = "text";
};

int cmd_reproduce(const ReproduceArgs& args) {
  if (args.dataset != "bibtex" && args.dataset != "delicious") {
    throw UsageError("dataset must be 'bibtex' or 'delicious'");
  }
  const std::string train_path =
      args.workdir + "/" + args.dataset + "_train.txt";
  const std::string test_path = args.workdir + "/" + args.dataset + "_test.txt";
  for (const std::string& path : {train_path, test_path}) {
    if (!std::filesystem::exists(path)) {
      throw IoError("dataset file not found: " + path);
    }
  }

  const Corpus train = load_corpus(train_path, CorpusRole::kTrain);
  const Corpus test = load_corpus(test_path, CorpusRole::kTest);
  const GoldLabels gold = gold_from_corpus(test);
  log_line(kv("event", "reproduce_loaded") + " " +
           kv_int("train_docs", train.size()) + " " +
           kv_int("test_docs", test.size()) + " " +
           kv_int("labels", train.num_labels));

  Hyperparameters hp = default_train_schedule(train.num_labels);
  hp.iterations = args.iterations;
  hp.burn_in = args.burn_in;
  hp.lag = args.lag;
  const TrainedModel model = train_llda(train, hp, args.seed);
  log_line(kv("event", "trained") + " " +
           kv_int("samples_retained", model.num_samples));

  Hyperparameters aux_hp;
  aux_hp.alpha.assign(static_cast<std::size_t>(args.topics), 0.1);
  aux_hp.beta = 0.01;
  aux_hp.iterations = args.iterations;
  aux_hp.burn_in = args.burn_in;
  aux_hp.lag = args.lag;
  const DepAuxModel aux = train_dep_aux(train, args.topics, aux_hp, args.seed);
  log_line(kv("event", "aux_trained") + " " + kv_int("topics", args.topics));

  const TfIdfIndex index = TfIdfIndex::build(train);
  const PropensityModel prop = propensities(train);

  const std::vector<Method> methods = {Method::kLlda, Method::kPrior,
                                       Method::kDep, Method::kSubset};
  const std::vector<std::string> metric_names = {"micro_f", "macro_f", "p@1",
                                                 "p@5",     "psp@1",   "psp@5"};
  std::map<std::string, std::map<std::string, double>> table;

  for (Method method : methods) {
    PredictionConfig cfg = default_prediction_config(method);
    cfg.schedule.iterations = args.iterations;
    cfg.schedule.burn_in = args.burn_in;
    cfg.schedule.lag = args.lag;
    cfg.neighbors = args.neighbors;
    cfg.threads = args.threads;
    std::map<std::string, double> sums;
    for (int run = 0; run < args.runs; ++run) {
      cfg.seed = args.seed + static_cast<std::uint64_t>(run);
      const double start = now_seconds();
      ScoreMatrix scores;
      switch (method) {
        case Method::kLlda:
          scores = predict_llda(model, test, cfg);
          break;
        case Method::kPrior:
          scores = predict_prior(model, test, cfg);
          break;
        case Method::kDep:
          scores = predict_dep(model, aux, test, cfg);
          break;
        case Method::kSubset:
          scores = predict_subset(model, test, index, train, cfg);
          break;
      }
      const EvalReport report =
          evaluate_scores(scores, gold, train.cardinality, prop);
      sums["micro_f"] += report.micro_f;
      sums["macro_f"] += report.macro_f;
      sums["p@1"] += report.precision.at(1);
      sums["p@5"] += report.precision.at(5);
      sums["psp@1"] += report.ps_precision.at(1);
      sums["psp@5"] += report.ps_precision.at(5);
      log_line(kv("event", "run_done") + " " +
               kv("method", method_name(method)) + " " + kv_int("run", run) +
               " " + kv("micro_f", report.micro_f) + " " +
               kv("seconds", now_seconds() - start));
    }
    for (const std::string& metric : metric_names) {
      table[method_name(method)][metric] =
          sums[metric] / static_cast<double>(args.runs);
    }
  }

  if (args.format == "kv") {
    for (Method method : methods) {
      for (const std::string& metric : metric_names) {
        std::printf("%s.%s=%.6f\n", method_name(method), metric.c_str(),
                    table[method_name(method)][metric]);
      }
    }
  } else {
    std::printf("dataset=%s runs=%d seed=%llu\n", args.dataset.c_str(),
                args.runs, static_cast<unsigned long long>(args.seed));
    std::printf("%-10s", "metric");
    for (Method method : methods) std::printf("%10s", method_name(method));
    std::printf("\n");
    for (const std::string& metric : metric_names) {
      std::printf("%-10s", metric.c_str());
      for (Method method : methods) {
        std::printf("%10.4f", table[method_name(method)][metric]);
      }
      std::printf("\n");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Labeled LDA with collapsed Gibbs sampling: training, "
               "candidate-restricted prediction and multi-label evaluation"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a labeled model");
  train->add_option("--train", train_args.train_path, "training data file")
      ->required();
  train->add_option("--model", train_args.model_dir, "output model directory")
      ->required();
  train->add_option("--iterations", train_args.iterations);
  train->add_option("--burnin", train_args.burn_in);
  train->add_option("--lag", train_args.lag);
  train->add_option("--chains", train_args.chains);
  train->add_option("--alpha-sum", train_args.alpha_sum,
                    "total Dirichlet mass on document-label priors");
  train->add_option("--beta", train_args.beta);
  train->add_flag("--aux", train_args.with_aux,
                  "also train the auxiliary label co-occurrence model");
  train->add_option("--topics", train_args.topics);
  train->add_option("--aux-alpha", train_args.aux_alpha);
  train->add_option("--aux-beta", train_args.aux_beta);
  train->add_option("--max-tokens", train_args.max_tokens,
                    "token cap per feature occurrence");
  train->add_option("--seed", train_args.seed);

  RetrieveArgs retrieve_args;
  CLI::App* retrieve =
      app.add_subcommand("retrieve", "Write candidate labels per test doc");
  retrieve->add_option("--train", retrieve_args.train_path)->required();
  retrieve->add_option("--test", retrieve_args.test_path)->required();
  retrieve->add_option("--out", retrieve_args.out_path)->required();
  retrieve->add_option("--neighbors", retrieve_args.neighbors);
  retrieve->add_option("--max-tokens", retrieve_args.max_tokens);
  retrieve->add_option("--threads", retrieve_args.threads);

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "Score test documents");
  predict->add_option("--model", predict_args.model_dir)->required();
  predict->add_option("--test", predict_args.test_path)->required();
  predict->add_option("--method", predict_args.method,
                      "llda | prior | dep | subset");
  predict->add_option("--out", predict_args.out_path)->required();
  predict->add_option("--train", predict_args.train_path,
                      "training data (subset retrieval)");
  predict->add_option("--candidates", predict_args.candidates_path,
                      "candidates file from 'retrieve', or 'all'");
  predict->add_option("--neighbors", predict_args.neighbors);
  predict->add_option("--alpha-sum", predict_args.alpha_sum);
  predict->add_option("--eta", predict_args.eta);
  predict->add_option("--beta", predict_args.beta,
                      "override the stored smoothing at load time");
  predict->add_option("--iterations", predict_args.iterations);
  predict->add_option("--burnin", predict_args.burn_in);
  predict->add_option("--lag", predict_args.lag);
  predict->add_option("--chains", predict_args.chains);
  predict->add_option("--inner-sweeps", predict_args.inner_sweeps);
  predict->add_option("--max-tokens", predict_args.max_tokens);
  predict->add_option("--seed", predict_args.seed);
  predict->add_option("--threads", predict_args.threads);

  EvaluateArgs eval_args;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Compute multi-label metrics");
  evaluate->add_option("--scores", eval_args.scores_path)->required();
  evaluate->add_option("--gold", eval_args.gold_path)->required();
  evaluate->add_option("--train", eval_args.train_path,
                       "training data for rcut threshold and propensities");
  evaluate->add_option("--compare", eval_args.compare_path,
                       "second score file for significance tests");
  evaluate->add_option("--k", eval_args.ks, "comma-separated k list");
  evaluate->add_option("--micro-variant", eval_args.micro_variant,
                       "pooled | weighted");
  evaluate->add_option("--format", eval_args.format, "text | kv | both");
  evaluate->add_option("--rcut-t", eval_args.rcut_t,
                       "override the rcut cardinality");
  evaluate->add_option("--propensity-a", eval_args.propensity_a);
  evaluate->add_option("--propensity-b", eval_args.propensity_b);
  evaluate->add_flag("--unit-propensity", eval_args.unit_propensity);
  evaluate->add_flag("--include-empty-gold", eval_args.include_empty_gold);
  evaluate->add_option("--level", eval_args.level, "significance level");

  ReproduceArgs repro_args;
  CLI::App* reproduce = app.add_subcommand(
      "reproduce", "Train once, predict with all methods, print a table");
  reproduce->add_option("--dataset", repro_args.dataset, "bibtex | delicious")
      ->required();
  reproduce->add_option("--workdir", repro_args.workdir)->required();
  reproduce->add_option("--runs", repro_args.runs);
  reproduce->add_option("--seed", repro_args.seed);
  reproduce->add_option("--threads", repro_args.threads);
  reproduce->add_option("--iterations", repro_args.iterations);
  reproduce->add_option("--burnin", repro_args.burn_in);
  reproduce->add_option("--lag", repro_args.lag);
  reproduce->add_option("--topics", repro_args.topics);
  reproduce->add_option("--neighbors", repro_args.neighbors);
  reproduce->add_option("--format", repro_args.format, "text | kv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (retrieve->parsed()) return cmd_retrieve(retrieve_args);
    if (predict->parsed()) return cmd_predict(predict_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (reproduce->parsed()) return cmd_reproduce(repro_args);
    std::cerr << "error: no command selected\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ModelFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

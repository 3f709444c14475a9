#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sllda/corpus.hpp"
#include "sllda/sampler.hpp"
#include "sllda/tfidf.hpp"

namespace sllda {

inline constexpr int kModelFormatVersion = 1;

// Sufficient statistics of a trained labeled model: accumulated expected
// label-feature counts plus the priors and corpus-level label frequencies
// needed at prediction time.
struct TrainedModel {
  std::int32_t num_features = 0;
  std::int32_t num_labels = 0;
  std::int64_t num_train_docs = 0;
  double beta = 0.01;
  double train_alpha_sum = 50.0;
  std::vector<double> label_frequencies;
  std::vector<double> acc_lv;  // L x V row-major
  std::int64_t num_samples = 0;
  int format_version = kModelFormatVersion;

  PhiMatrix phi() const {
    return estimate_phi(acc_lv, num_samples, beta, num_features, num_labels);
  }
};

// Auxiliary topic model over label-set pseudo-documents; captures label
// co-occurrence for frequency-and-dependency-aware priors.
struct DepAuxModel {
  std::int32_t num_topics = 0;  // T
  std::int32_t num_labels = 0;
  double alpha = 0.1;
  double beta = 0.01;
  std::vector<double> acc_tl;  // T x L row-major
  std::int64_t num_samples = 0;

  // Topic-label distributions, label-major so a per-label scan over topics
  // is contiguous.
  PhiMatrix phi() const {
    return estimate_phi(acc_tl, num_samples, beta, num_labels, num_topics);
  }
};

enum class Method { kLlda, kPrior, kDep, kSubset };

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct PredictionConfig {
  Method method = Method::kLlda;
  double alpha_sum = 30.0;  // symmetric base: alpha_l = alpha_sum / L
  double eta = 50.0;        // asymmetric-prior strength (prior: 50, dep: 120)
  int neighbors = 10;       // subset candidate retrieval
  int dep_inner_sweeps = 5;
  Hyperparameters schedule;  // alpha field unused here
  std::uint64_t seed = 0;
  int threads = 1;
};

PredictionConfig default_prediction_config(Method method);
Hyperparameters default_train_schedule(std::int32_t num_labels);

// Per-document ranking of label scores (theta estimates): descending score,
// ties broken by ascending label id.
struct DocScores {
  std::int64_t doc_id = 0;
  std::vector<std::pair<LabelId, double>> ranked;
  // Subset provenance: the candidate labels the prediction was restricted
  // to.  Empty means the full label set was active.
  std::vector<LabelId> candidates;
};

struct ScoreMatrix {
  Method method = Method::kLlda;
  std::vector<DocScores> docs;
};

using SweepCallback = std::function<void(int iteration, double seconds)>;

TrainedModel train_llda(const Corpus& train, const Hyperparameters& hp,
                        std::uint64_t seed,
                        const SweepCallback& on_sweep = {});

DepAuxModel train_dep_aux(const Corpus& train, std::int32_t num_topics,
                          const Hyperparameters& schedule, std::uint64_t seed);

// alpha_l = eta * f_l + alpha_base
std::vector<double> prior_alpha(const std::vector<double>& label_frequencies,
                                double eta, double alpha_base);

// alpha_l = eta * (theta' . phi')_l + alpha_base
std::vector<double> dep_alpha(std::span<const double> theta_prime,
                              const PhiMatrix& aux_phi, double eta,
                              double alpha_base);

ScoreMatrix predict_llda(const TrainedModel& model, const Corpus& test,
                         const PredictionConfig& cfg);
ScoreMatrix predict_prior(const TrainedModel& model, const Corpus& test,
                          const PredictionConfig& cfg);
ScoreMatrix predict_dep(const TrainedModel& model, const DepAuxModel& aux,
                        const Corpus& test, const PredictionConfig& cfg);
ScoreMatrix predict_subset(const TrainedModel& model, const Corpus& test,
                           const TfIdfIndex& index, const Corpus& train,
                           const PredictionConfig& cfg);
// Subset prediction with precomputed candidate label sets (one per test
// document, each sorted and nonempty).
ScoreMatrix predict_with_candidates(
    const TrainedModel& model, const Corpus& test,
    const std::vector<std::vector<LabelId>>& candidates,
    const PredictionConfig& cfg);

// Model directory layout: `meta` (key=value), `counts` (sparse `l v value`
// triplets, entries below 1e-8 dropped), `freq` (one f_l per line), and an
// optional `aux/` subdirectory with the auxiliary model.
void save_model(const TrainedModel& model, const std::string& dir);
void save_aux_model(const DepAuxModel& aux, const std::string& dir);
TrainedModel load_model(const std::string& dir);
std::optional<DepAuxModel> load_aux_model(const std::string& dir);

// Score file: `doc_id TAB label:score label:score ...`, scores with six
// decimals, full ranking per line.
void write_scores(const ScoreMatrix& scores, const std::string& path);
ScoreMatrix read_scores(const std::string& path);

// Candidate file (`retrieve` output): one line per test document,
// `doc_id TAB neighbor:sim,... TAB label,label,...`.
void write_candidates(const std::vector<CandidateSet>& candidates,
                      const std::string& path);
std::vector<CandidateSet> read_candidates(const std::string& path);

}  // namespace sllda

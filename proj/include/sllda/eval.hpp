#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sllda/corpus.hpp"
#include "sllda/model.hpp"

namespace sllda {

struct GoldLabels {
  std::vector<std::vector<LabelId>> docs;  // sorted per document
  std::int32_t num_labels = 0;
};

GoldLabels gold_from_corpus(const Corpus& test);

// rcut threshold: round the training label cardinality half up, floor 1.
int rcut_threshold(double train_cardinality);

// Hard assignment: each document keeps its top-t ranked labels (fewer when
// the ranking is shorter).  Output sets are sorted.
std::vector<std::vector<LabelId>> rcut_assign(const ScoreMatrix& scores,
                                              double train_cardinality);

// Inverse-propensity weights following the standard logistic form
// p_l = 1 / (1 + C * (N_l + B)^-A) with C = (ln N - 1)(B + 1)^A.
struct PropensityModel {
  double A = 0.55;
  double B = 1.5;
  double C = 0.0;
  std::int64_t num_train_docs = 0;
  std::vector<double> p;  // per label, in (0, 1]

  static PropensityModel from_counts(const std::vector<std::int64_t>& positives,
                                     std::int64_t num_train_docs, double A,
                                     double B);
  static PropensityModel uniform(std::int32_t num_labels);
};

PropensityModel propensities(const Corpus& train, double A = 0.55,
                             double B = 1.5);

enum class MicroVariant { kPooled, kWeighted };

struct EvalConfig {
  std::vector<int> ks = {1, 5};
  MicroVariant micro_variant = MicroVariant::kPooled;
  // When set, documents with empty gold label sets contribute their
  // predicted positives to micro pooling; by default they are skipped by
  // every label-based metric.
  bool include_empty_gold = false;
};

enum class Significance { kSignificant, kNotSignificant, kUndefined };

struct ZTestResult {
  double z = 0.0;
  double p_value = 1.0;
  Significance verdict = Significance::kUndefined;
};

// Two-proportion pooled z-test over per-document success indicators.
ZTestResult z_test(const std::vector<std::uint8_t>& success_a,
                   const std::vector<std::uint8_t>& success_b,
                   double level = 0.05);

struct EvalReport {
  double micro_f = 0.0;
  double macro_f = 0.0;
  std::map<int, double> precision;     // k -> precision@k
  std::map<int, double> ps_precision;  // k -> PS precision@k
  int rcut_t = 1;
  std::int64_t docs_total = 0;
  std::int64_t docs_evaluated = 0;  // empty-gold documents excluded
  // Per-document binary success indicators (z-test inputs): "rcut" means a
  // top-t hit, "p@k" a top-k hit.  Indexed over evaluated documents.
  std::map<std::string, std::vector<std::uint8_t>> indicators;
};

double micro_f(const std::vector<std::vector<LabelId>>& assigned,
               const GoldLabels& gold, bool include_empty_gold = false);
double micro_f_weighted(const std::vector<std::vector<LabelId>>& assigned,
                        const GoldLabels& gold);
double macro_f(const std::vector<std::vector<LabelId>>& assigned,
               const GoldLabels& gold, std::int32_t num_labels);
double precision_at_k(const ScoreMatrix& scores, const GoldLabels& gold,
                      int k, bool include_empty_gold = false);
double ps_precision_at_k(const ScoreMatrix& scores, const GoldLabels& gold,
                         const PropensityModel& prop, int k,
                         bool include_empty_gold = false);

EvalReport evaluate_scores(const ScoreMatrix& scores, const GoldLabels& gold,
                           double train_cardinality,
                           const PropensityModel& prop,
                           const EvalConfig& config = {});

}  // namespace sllda

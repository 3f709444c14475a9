#include "sllda/eval.hpp"

#include <algorithm>
#include <cmath>

namespace sllda {
namespace {

struct Tally {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

double f1(const Tally& t) {
  const double denom = static_cast<double>(2 * t.tp + t.fp + t.fn);
  if (denom == 0.0) return 0.0;
  return static_cast<double>(2 * t.tp) / denom;
}

Tally doc_tally(const std::vector<LabelId>& assigned,
                const std::vector<LabelId>& gold) {
  Tally t;
  std::size_t i = 0, j = 0;
  while (i < assigned.size() && j < gold.size()) {
    if (assigned[i] == gold[j]) {
      t.tp++;
      ++i;
      ++j;
    } else if (assigned[i] < gold[j]) {
      t.fp++;
      ++i;
    } else {
      t.fn++;
      ++j;
    }
  }
  t.fp += static_cast<std::int64_t>(assigned.size() - i);
  t.fn += static_cast<std::int64_t>(gold.size() - j);
  return t;
}

void per_label_tallies(const std::vector<std::vector<LabelId>>& assigned,
                       const GoldLabels& gold, std::int32_t num_labels,
                       std::vector<Tally>& out) {
  out.assign(static_cast<std::size_t>(num_labels), Tally{});
  for (std::size_t m = 0; m < assigned.size(); ++m) {
    if (gold.docs[m].empty()) continue;
    std::size_t i = 0, j = 0;
    const auto& a = assigned[m];
    const auto& g = gold.docs[m];
    while (i < a.size() && j < g.size()) {
      if (a[i] == g[j]) {
        out[static_cast<std::size_t>(a[i])].tp++;
        ++i;
        ++j;
      } else if (a[i] < g[j]) {
        out[static_cast<std::size_t>(a[i])].fp++;
        ++i;
      } else {
        out[static_cast<std::size_t>(g[j])].fn++;
        ++j;
      }
    }
    for (; i < a.size(); ++i) out[static_cast<std::size_t>(a[i])].fp++;
    for (; j < g.size(); ++j) out[static_cast<std::size_t>(g[j])].fn++;
  }
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ContractError("score/gold document counts differ: " +
                        std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

GoldLabels gold_from_corpus(const Corpus& test) {
  GoldLabels gold;
  gold.num_labels = test.num_labels;
  gold.docs.reserve(test.size());
  for (const SparseDocument& doc : test.documents) {
    gold.docs.push_back(doc.labels);
  }
  return gold;
}

int rcut_threshold(double train_cardinality) {
  if (!(train_cardinality > 0.0)) {
    throw ContractError("training cardinality must be positive");
  }
  const int t = static_cast<int>(std::floor(train_cardinality + 0.5));
  return std::max(1, t);
}

std::vector<std::vector<LabelId>> rcut_assign(const ScoreMatrix& scores,
                                              double train_cardinality) {
  const std::size_t t =
      static_cast<std::size_t>(rcut_threshold(train_cardinality));
  std::vector<std::vector<LabelId>> assigned;
  assigned.reserve(scores.docs.size());
  for (const DocScores& doc : scores.docs) {
    const std::size_t keep = std::min(t, doc.ranked.size());
    std::vector<LabelId> labels;
    labels.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      labels.push_back(doc.ranked[i].first);
    }
    std::sort(labels.begin(), labels.end());
    assigned.push_back(std::move(labels));
  }
  return assigned;
}

double micro_f(const std::vector<std::vector<LabelId>>& assigned,
               const GoldLabels& gold, bool include_empty_gold) {
  check_sizes(assigned.size(), gold.docs.size());
  Tally pooled;
  for (std::size_t m = 0; m < assigned.size(); ++m) {
    if (gold.docs[m].empty()) {
      if (include_empty_gold) {
        pooled.fp += static_cast<std::int64_t>(assigned[m].size());
      }
      continue;
    }
    const Tally t = doc_tally(assigned[m], gold.docs[m]);
    pooled.tp += t.tp;
    pooled.fp += t.fp;
    pooled.fn += t.fn;
  }
  return f1(pooled);
}

double micro_f_weighted(const std::vector<std::vector<LabelId>>& assigned,
                        const GoldLabels& gold) {
  check_sizes(assigned.size(), gold.docs.size());
  std::vector<Tally> tallies;
  per_label_tallies(assigned, gold, gold.num_labels, tallies);
  // Per-label F1 averaged with weights proportional to each label's gold
  // frequency in the evaluated documents.
  double weighted = 0.0;
  std::int64_t total_positives = 0;
  for (std::size_t l = 0; l < tallies.size(); ++l) {
    const std::int64_t positives = tallies[l].tp + tallies[l].fn;
    total_positives += positives;
    weighted += static_cast<double>(positives) * f1(tallies[l]);
  }
  if (total_positives == 0) return 0.0;
  return weighted / static_cast<double>(total_positives);
}

double macro_f(const std::vector<std::vector<LabelId>>& assigned,
               const GoldLabels& gold, std::int32_t num_labels) {
  check_sizes(assigned.size(), gold.docs.size());
  std::vector<Tally> tallies;
  per_label_tallies(assigned, gold, num_labels, tallies);
  double sum = 0.0;
  for (const Tally& t : tallies) sum += f1(t);
  return sum / static_cast<double>(num_labels);
}

double precision_at_k(const ScoreMatrix& scores, const GoldLabels& gold,
                      int k, bool include_empty_gold) {
  check_sizes(scores.docs.size(), gold.docs.size());
  if (k < 1) throw ContractError("k must be >= 1");
  double total = 0.0;
  std::int64_t docs = 0;
  for (std::size_t m = 0; m < scores.docs.size(); ++m) {
    if (gold.docs[m].empty() && !include_empty_gold) continue;
    docs++;
    const auto& ranked = scores.docs[m].ranked;
    const std::size_t top = std::min<std::size_t>(ranked.size(),
                                                  static_cast<std::size_t>(k));
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < top; ++i) {
      if (std::binary_search(gold.docs[m].begin(), gold.docs[m].end(),
                             ranked[i].first)) {
        hits++;
      }
    }
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return docs == 0 ? 0.0 : total / static_cast<double>(docs);
}

PropensityModel PropensityModel::from_counts(
    const std::vector<std::int64_t>& positives, std::int64_t num_train_docs,
    double A, double B) {
  if (num_train_docs < 2) {
    throw ContractError("propensity model needs at least two documents");
  }
  PropensityModel model;
  model.A = A;
  model.B = B;
  model.num_train_docs = num_train_docs;
  model.C = (std::log(static_cast<double>(num_train_docs)) - 1.0) *
            std::pow(B + 1.0, A);
  model.p.resize(positives.size());
  for (std::size_t l = 0; l < positives.size(); ++l) {
    const double nl = static_cast<double>(positives[l]);
    model.p[l] = 1.0 / (1.0 + model.C * std::exp(-A * std::log(nl + B)));
  }
  return model;
}

PropensityModel PropensityModel::uniform(std::int32_t num_labels) {
  PropensityModel model;
  model.A = 0.0;
  model.B = 0.0;
  model.C = 0.0;
  model.num_train_docs = 0;
  model.p.assign(static_cast<std::size_t>(num_labels), 1.0);
  return model;
}

PropensityModel propensities(const Corpus& train, double A, double B) {
  return PropensityModel::from_counts(train.label_doc_counts,
                                      static_cast<std::int64_t>(train.size()),
                                      A, B);
}

double ps_precision_at_k(const ScoreMatrix& scores, const GoldLabels& gold,
                         const PropensityModel& prop, int k,
                         bool include_empty_gold) {
  check_sizes(scores.docs.size(), gold.docs.size());
  if (k < 1) throw ContractError("k must be >= 1");
  double total = 0.0;
  std::int64_t docs = 0;
  for (std::size_t m = 0; m < scores.docs.size(); ++m) {
    if (gold.docs[m].empty() && !include_empty_gold) continue;
    docs++;
    const auto& ranked = scores.docs[m].ranked;
    const std::size_t top = std::min<std::size_t>(ranked.size(),
                                                  static_cast<std::size_t>(k));
    double gain = 0.0;
    for (std::size_t i = 0; i < top; ++i) {
      const LabelId l = ranked[i].first;
      if (l < 0 || static_cast<std::size_t>(l) >= prop.p.size()) {
        throw ContractError("score label " + std::to_string(l) +
                            " outside the propensity model range");
      }
      if (std::binary_search(gold.docs[m].begin(), gold.docs[m].end(), l)) {
        gain += 1.0 / prop.p[static_cast<std::size_t>(l)];
      }
    }
    total += gain / static_cast<double>(k);
  }
  return docs == 0 ? 0.0 : total / static_cast<double>(docs);
}

ZTestResult z_test(const std::vector<std::uint8_t>& success_a,
                   const std::vector<std::uint8_t>& success_b, double level) {
  ZTestResult result;
  const double n1 = static_cast<double>(success_a.size());
  const double n2 = static_cast<double>(success_b.size());
  if (n1 == 0.0 || n2 == 0.0) return result;  // undefined
  double x1 = 0.0, x2 = 0.0;
  for (std::uint8_t s : success_a) x1 += s ? 1.0 : 0.0;
  for (std::uint8_t s : success_b) x2 += s ? 1.0 : 0.0;
  const double pooled = (x1 + x2) / (n1 + n2);
  const double variance = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
  if (variance <= 0.0) {
    // Zero-variance inputs (all successes or all failures pooled).
    result.z = 0.0;
    result.p_value = 1.0;
    result.verdict = Significance::kUndefined;
    return result;
  }
  result.z = (x1 / n1 - x2 / n2) / std::sqrt(variance);
  result.p_value = std::erfc(std::abs(result.z) / std::sqrt(2.0));
  result.verdict = result.p_value < level ? Significance::kSignificant
                                          : Significance::kNotSignificant;
  return result;
}

EvalReport evaluate_scores(const ScoreMatrix& scores, const GoldLabels& gold,
                           double train_cardinality,
                           const PropensityModel& prop,
                           const EvalConfig& config) {
  check_sizes(scores.docs.size(), gold.docs.size());
  EvalReport report;
  report.rcut_t = rcut_threshold(train_cardinality);
  report.docs_total = static_cast<std::int64_t>(scores.docs.size());

  const auto assigned = rcut_assign(scores, train_cardinality);
  report.micro_f = config.micro_variant == MicroVariant::kPooled
                       ? micro_f(assigned, gold, config.include_empty_gold)
                       : micro_f_weighted(assigned, gold);
  report.macro_f = macro_f(assigned, gold, gold.num_labels);
  for (int k : config.ks) {
    report.precision[k] =
        precision_at_k(scores, gold, k, config.include_empty_gold);
    report.ps_precision[k] =
        ps_precision_at_k(scores, gold, prop, k, config.include_empty_gold);
  }

  // Per-document success indicators for significance testing.
  std::vector<std::uint8_t> rcut_hits;
  std::map<int, std::vector<std::uint8_t>> topk_hits;
  for (std::size_t m = 0; m < scores.docs.size(); ++m) {
    if (gold.docs[m].empty() && !config.include_empty_gold) continue;
    const auto& g = gold.docs[m];
    const auto hit_in_top = [&](std::size_t top) {
      const auto& ranked = scores.docs[m].ranked;
      const std::size_t limit = std::min(top, ranked.size());
      for (std::size_t i = 0; i < limit; ++i) {
        if (std::binary_search(g.begin(), g.end(), ranked[i].first)) {
          return true;
        }
      }
      return false;
    };
    rcut_hits.push_back(
        hit_in_top(static_cast<std::size_t>(report.rcut_t)) ? 1 : 0);
    for (int k : config.ks) {
      topk_hits[k].push_back(
          hit_in_top(static_cast<std::size_t>(k)) ? 1 : 0);
    }
  }
  report.docs_evaluated = static_cast<std::int64_t>(rcut_hits.size());
  report.indicators["rcut"] = std::move(rcut_hits);
  for (auto& [k, hits] : topk_hits) {
    report.indicators["p@" + std::to_string(k)] = std::move(hits);
  }
  return report;
}

}  // namespace sllda

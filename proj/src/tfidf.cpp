#include "sllda/tfidf.hpp"

#include <algorithm>
#include <cmath>

#include "sllda/common.hpp"

namespace sllda {
namespace {

// Raw token counts per feature for one document (tokens are sorted).
std::vector<std::pair<FeatureId, double>> term_counts(
    const SparseDocument& doc) {
  std::vector<std::pair<FeatureId, double>> out;
  std::size_t i = 0;
  while (i < doc.tokens.size()) {
    std::size_t j = i;
    while (j < doc.tokens.size() && doc.tokens[j] == doc.tokens[i]) ++j;
    out.emplace_back(doc.tokens[i], static_cast<double>(j - i));
    i = j;
  }
  return out;
}

void l2_normalize(std::vector<std::pair<FeatureId, double>>& vec) {
  double sq = 0.0;
  for (const auto& [id, w] : vec) sq += w * w;
  if (sq <= 0.0) {
    vec.clear();
    return;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& [id, w] : vec) w *= inv;
}

}  // namespace

TfIdfIndex TfIdfIndex::build(const Corpus& train) {
  if (train.documents.empty()) {
    throw ContractError("tf-idf index requires a nonempty training corpus");
  }
  TfIdfIndex index;
  index.num_docs_ = static_cast<std::int32_t>(train.size());
  index.num_features_ = train.num_features;

  std::vector<std::int64_t> df(static_cast<std::size_t>(train.num_features), 0);
  for (const SparseDocument& doc : train.documents) {
    for (const auto& [id, value] : doc.features) {
      df[static_cast<std::size_t>(id)]++;
    }
  }
  index.idf_.resize(df.size(), 0.0);
  const double m = static_cast<double>(train.size());
  for (std::size_t v = 0; v < df.size(); ++v) {
    index.idf_[v] = df[v] > 0 ? std::log(m / static_cast<double>(df[v])) : 0.0;
  }

  index.postings_.resize(df.size());
  for (std::size_t v = 0; v < df.size(); ++v) {
    index.postings_[v].reserve(static_cast<std::size_t>(df[v]));
  }
  index.zero_norm_.assign(train.size(), 0);
  for (std::size_t d = 0; d < train.size(); ++d) {
    auto vec = term_counts(train.documents[d]);
    for (auto& [id, w] : vec) w *= index.idf_[static_cast<std::size_t>(id)];
    l2_normalize(vec);
    if (vec.empty()) {
      index.zero_norm_[d] = 1;
      continue;
    }
    for (const auto& [id, w] : vec) {
      if (w != 0.0) {
        index.postings_[static_cast<std::size_t>(id)].push_back(
            {static_cast<std::int32_t>(d), w});
      }
    }
  }
  return index;
}

std::vector<std::pair<FeatureId, double>> TfIdfIndex::transform(
    const SparseDocument& query) const {
  auto vec = term_counts(query);
  std::vector<std::pair<FeatureId, double>> out;
  for (auto& [id, w] : vec) {
    if (id < num_features_) {
      const double weight = w * idf_[static_cast<std::size_t>(id)];
      if (weight != 0.0) out.emplace_back(id, weight);
    }
  }
  l2_normalize(out);
  return out;
}

std::vector<std::pair<FeatureId, double>> TfIdfIndex::document_vector(
    std::int32_t doc) const {
  std::vector<std::pair<FeatureId, double>> out;
  for (std::size_t v = 0; v < postings_.size(); ++v) {
    for (const Posting& p : postings_[v]) {
      if (p.doc_id == doc) out.emplace_back(static_cast<FeatureId>(v), p.weight);
    }
  }
  return out;
}

std::vector<Neighbor> TfIdfIndex::nearest_neighbors(
    const SparseDocument& query, int n) const {
  if (n < 1) throw ContractError("neighbor count must be >= 1");
  const auto q = transform(query);
  if (q.empty()) return {};

  // Dot products against unit vectors accumulated through posting lists.
  std::vector<double> score(static_cast<std::size_t>(num_docs_), 0.0);
  for (const auto& [id, w] : q) {
    for (const Posting& p : postings_[static_cast<std::size_t>(id)]) {
      score[static_cast<std::size_t>(p.doc_id)] += w * p.weight;
    }
  }

  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(num_docs_));
  for (std::int32_t d = 0; d < num_docs_; ++d) {
    all.push_back({d, score[static_cast<std::size_t>(d)]});
  }
  const std::size_t keep =
      std::min<std::size_t>(static_cast<std::size_t>(n), all.size());
  const auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.doc_id < b.doc_id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                    all.end(), better);
  all.resize(keep);
  return all;
}

std::vector<Neighbor> nearest_neighbors(const TfIdfIndex& index,
                                        const SparseDocument& query, int n) {
  return index.nearest_neighbors(query, n);
}

CandidateSet candidate_labels(const TfIdfIndex& index, const Corpus& train,
                              const SparseDocument& query, int n) {
  CandidateSet cs;
  cs.test_doc_id = query.doc_id;
  cs.neighbors = index.nearest_neighbors(query, n);
  if (cs.neighbors.empty()) {
    // Zero-norm query: degrade to the full observed label set.
    cs.used_fallback = true;
    for (LabelId l = 0; l < train.num_labels; ++l) {
      if (train.label_doc_counts[static_cast<std::size_t>(l)] > 0) {
        cs.labels.push_back(l);
      }
    }
    return cs;
  }
  for (const Neighbor& nb : cs.neighbors) {
    const auto& labels =
        train.documents[static_cast<std::size_t>(nb.doc_id)].labels;
    cs.labels.insert(cs.labels.end(), labels.begin(), labels.end());
  }
  std::sort(cs.labels.begin(), cs.labels.end());
  cs.labels.erase(std::unique(cs.labels.begin(), cs.labels.end()),
                  cs.labels.end());
  return cs;
}

}  // namespace sllda

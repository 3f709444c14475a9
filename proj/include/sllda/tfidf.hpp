#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sllda/corpus.hpp"

namespace sllda {

struct Neighbor {
  std::int32_t doc_id = 0;
  double similarity = 0.0;
};

// Candidate label subspace for one test document: the union of the label
// sets of its nearest training neighbors.  When the query has no usable
// tf-idf mass the fallback keeps every label observed in training and the
// neighbor list stays empty.
struct CandidateSet {
  std::int64_t test_doc_id = 0;
  std::vector<Neighbor> neighbors;  // descending similarity, ties by doc id
  std::vector<LabelId> labels;      // sorted union of neighbor label sets
  bool used_fallback = false;
};

// tf-idf index over a training corpus: ln(M/df) idf, raw token counts as tf,
// per-document L2 normalization, and an inverted index for retrieval.
class TfIdfIndex {
 public:
  static TfIdfIndex build(const Corpus& train);

  // Exact top-n cosine neighbors (equivalent to exhaustive scoring); ties
  // broken by ascending doc id.  Zero-norm queries return an empty list.
  std::vector<Neighbor> nearest_neighbors(const SparseDocument& query,
                                          int n) const;

  std::int32_t num_documents() const { return num_docs_; }
  const std::vector<double>& idf() const { return idf_; }
  bool document_has_zero_norm(std::int32_t doc) const {
    return zero_norm_[static_cast<std::size_t>(doc)] != 0;
  }

  // Normalized tf-idf vector of a stored document, reconstructed from the
  // inverted index (test support; linear in the index size).
  std::vector<std::pair<FeatureId, double>> document_vector(
      std::int32_t doc) const;

  // Query transform: training idf weights, L2-normalized.  Features unseen
  // in training get weight zero.
  std::vector<std::pair<FeatureId, double>> transform(
      const SparseDocument& query) const;

 private:
  struct Posting {
    std::int32_t doc_id;
    double weight;
  };

  std::int32_t num_docs_ = 0;
  std::int32_t num_features_ = 0;
  std::vector<double> idf_;
  std::vector<std::vector<Posting>> postings_;  // per feature, doc ascending
  std::vector<std::uint8_t> zero_norm_;
};

std::vector<Neighbor> nearest_neighbors(const TfIdfIndex& index,
                                        const SparseDocument& query, int n);

CandidateSet candidate_labels(const TfIdfIndex& index, const Corpus& train,
                              const SparseDocument& query, int n);

}  // namespace sllda

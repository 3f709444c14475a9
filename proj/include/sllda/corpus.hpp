#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sllda/common.hpp"

namespace sllda {

// One instance of a sparse multi-label data set.  `features` holds the
// parsed nonzero values; `tokens` is the discretized stream consumed by the
// sampler (feature ids ascending, repeats contiguous).
struct SparseDocument {
  std::int64_t doc_id = 0;
  std::vector<std::pair<FeatureId, double>> features;  // sorted by id, v > 0
  std::vector<LabelId> labels;                         // sorted, unique
  std::vector<FeatureId> tokens;

  std::int64_t token_count() const {
    return static_cast<std::int64_t>(tokens.size());
  }
  bool has_label(LabelId l) const;
};

struct Corpus {
  std::vector<SparseDocument> documents;
  std::int32_t num_features = 0;  // V
  std::int32_t num_labels = 0;    // L
  // Fraction of documents carrying each label and the absolute counts.
  std::vector<double> label_frequencies;
  std::vector<std::int64_t> label_doc_counts;
  double cardinality = 0.0;  // mean labels per document
  std::int64_t dropped_empty_label_docs = 0;

  std::size_t size() const { return documents.size(); }
  // Recomputes frequencies, counts and cardinality from `documents`.
  void refresh_statistics();
};

enum class CorpusRole { kTrain, kTest };

struct LoadOptions {
  // Upper bound on tokens emitted per feature occurrence; guards against
  // adversarially large values in otherwise well-formed files.
  std::int64_t max_tokens_per_feature = 1000;
};

struct CorpusStats {
  std::int64_t num_documents = 0;
  std::int32_t num_features = 0;
  std::int32_t num_labels = 0;
  std::int64_t total_tokens = 0;
  double cardinality = 0.0;
  double avg_label_frequency = 0.0;  // mean absolute document count per label
  double vocabulary_density = 0.0;   // nnz / (M * V)
};

// Number of sampler tokens contributed by one feature value: round half up,
// with any positive value contributing at least one token.
std::int64_t tokenize(double value, std::int64_t cap = 1000);

// Reads the repository text format (header `M V L`, then per line
// `l1,l2,... f:v f:v ...`).  Training role drops documents with empty label
// sets and records how many were dropped; test role keeps them.
Corpus load_corpus(const std::string& path, CorpusRole role,
                   const LoadOptions& options = {});

// Writes a corpus back in the same format, feature values rendered so that
// reloading reproduces the corpus exactly.
void save_corpus(const Corpus& corpus, const std::string& path);

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace sllda

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sllda/corpus.hpp"
#include "sllda/rng.hpp"

namespace sllda {

// Gibbs schedule plus Dirichlet priors.  `alpha` is indexed by label id and
// must cover every label that can appear in an active set.
struct Hyperparameters {
  std::vector<double> alpha;
  double beta = 0.01;
  int iterations = 200;
  int burn_in = 50;
  int lag = 5;
  int chains = 1;

  int retained_samples() const { return (iterations - burn_in) / lag; }
  // Iterations are 1-based; a sample is retained after the burn-in period,
  // every `lag` sweeps.
  bool is_retained(int iteration) const {
    return iteration > burn_in && (iteration - burn_in) % lag == 0;
  }
  void validate(std::size_t num_labels) const;
};

// Accumulated full-conditional mass: the expected-count estimator state.
struct ExpectedCounts {
  std::vector<double> acc_lv;               // L x V row-major
  std::vector<std::vector<double>> acc_ml;  // per doc, over its active labels
  std::int64_t num_samples = 0;
};

// Dense label-feature distributions stored feature-major so the per-token
// scan over labels is contiguous.
class PhiMatrix {
 public:
  PhiMatrix() = default;
  PhiMatrix(std::int32_t num_features, std::int32_t num_labels)
      : num_features_(num_features),
        num_labels_(num_labels),
        data_(static_cast<std::size_t>(num_features) *
                  static_cast<std::size_t>(num_labels),
              0.0) {}

  std::int32_t num_features() const { return num_features_; }
  std::int32_t num_labels() const { return num_labels_; }
  double operator()(FeatureId v, LabelId l) const {
    return data_[static_cast<std::size_t>(v) *
                     static_cast<std::size_t>(num_labels_) +
                 static_cast<std::size_t>(l)];
  }
  double& at(FeatureId v, LabelId l) {
    return data_[static_cast<std::size_t>(v) *
                     static_cast<std::size_t>(num_labels_) +
                 static_cast<std::size_t>(l)];
  }
  std::span<const double> feature_row(FeatureId v) const {
    return {data_.data() + static_cast<std::size_t>(v) *
                               static_cast<std::size_t>(num_labels_),
            static_cast<std::size_t>(num_labels_)};
  }
  std::vector<double> label_row(LabelId l) const {
    std::vector<double> row(static_cast<std::size_t>(num_features_));
    for (FeatureId v = 0; v < num_features_; ++v) row[v] = (*this)(v, l);
    return row;
  }

 private:
  std::int32_t num_features_ = 0;
  std::int32_t num_labels_ = 0;
  std::vector<double> data_;
};

// phi_lv = (acc_lv / S + beta) / (sum_v' acc_lv' / S + V * beta)
PhiMatrix estimate_phi(std::span<const double> acc_lv, std::int64_t num_samples,
                       double beta, std::int32_t num_features,
                       std::int32_t num_labels);

// theta_k = (acc[k] / S + alpha[k]) / (N + sum(alpha)), over the active set.
std::vector<double> estimate_theta(std::span<const double> acc,
                                   std::int64_t num_samples,
                                   std::span<const double> alpha,
                                   std::int64_t num_tokens);

// Training-mode collapsed Gibbs sampler over a corpus.  Label assignments
// are constrained to each document's active label list; counts n_lv, n_ml
// and the assignment vector z are maintained incrementally.
class GibbsSampler {
 public:
  // Initializes every token uniformly at random over its document's active
  // set (documents with a singleton set are assigned deterministically and
  // consume no randomness).
  GibbsSampler(const Corpus& corpus, const Hyperparameters& hp,
               std::vector<std::vector<LabelId>> active_per_doc,
               std::uint64_t seed);

  // One full pass: every token is resampled in document order, stream order.
  void sweep();

  // Adds each token's full conditional distribution (computed with the token
  // excluded) into the accumulators and bumps the sample count.
  void accumulate(ExpectedCounts& expected) const;

  // Runs the schedule in `hp` and returns the accumulated expected counts.
  ExpectedCounts run();

  ExpectedCounts make_expected_counts() const;

  // Conditional distribution for token i of document m over the document's
  // active labels, as if that token were removed from the counts.
  std::vector<double> conditional(std::size_t m, std::size_t i) const;

  // Count accessors (test and estimator support).
  std::int32_t label_feature_count(LabelId l, FeatureId v) const {
    return n_lv_[static_cast<std::size_t>(l) *
                     static_cast<std::size_t>(num_features_) +
                 static_cast<std::size_t>(v)];
  }
  std::int64_t label_token_total(LabelId l) const {
    return n_l_total_[static_cast<std::size_t>(l)];
  }
  std::int32_t doc_label_count(std::size_t m, LabelId l) const;
  const std::vector<LabelId>& active_labels(std::size_t m) const {
    return active_[m];
  }
  std::vector<LabelId> assignments(std::size_t m) const;
  // Overwrites document m's assignments (labels must be in the active set)
  // and rebuilds all counts.
  void force_assignments(std::size_t m, const std::vector<LabelId>& labels);
  bool counts_consistent() const;
  std::size_t num_documents() const { return z_.size(); }

 private:
  void rebuild_counts();
  // Unnormalized scores over document m's active labels for feature v.
  // `excluded` (an index in the active list, or -1) removes one count from
  // that label, implementing the leave-one-out conditional arithmetically.
  void scores_into(std::size_t m, FeatureId v, std::int32_t excluded,
                   std::vector<double>& out) const;

  const Corpus* corpus_;
  const Hyperparameters* hp_;
  std::int32_t num_features_ = 0;
  std::int32_t num_labels_ = 0;
  std::vector<std::vector<LabelId>> active_;
  std::vector<std::vector<std::int32_t>> z_;  // index into the active list
  std::vector<std::vector<std::int32_t>> n_ml_;
  std::vector<std::int32_t> n_lv_;
  std::vector<std::int64_t> n_l_total_;
  Rng rng_;
  mutable std::vector<double> scratch_;
};

// Held-out inference for a single document with fixed label-feature
// distributions.  Only the document-level counts evolve.
class DocSampler {
 public:
  DocSampler(std::span<const FeatureId> tokens, const PhiMatrix& phi,
             std::span<const LabelId> active, std::vector<double> alpha,
             Rng rng);

  void sweep();
  void accumulate();

  // Swaps the token identities while keeping assignments and counts; the
  // new stream must have the same length.
  void replace_tokens(std::span<const FeatureId> tokens);
  void set_alpha(std::vector<double> alpha);

  std::vector<double> conditional(std::size_t i) const;
  // Expected-count estimate from the accumulated samples.
  std::vector<double> theta() const;
  // Plug-in estimate from the current hard counts (no accumulation).
  std::vector<double> theta_from_counts() const;

  LabelId assignment_label(std::size_t i) const {
    return active_[static_cast<std::size_t>(z_[i])];
  }
  std::span<const LabelId> active() const { return active_; }
  std::span<const double> acc() const { return acc_; }
  std::span<const double> alpha() const { return alpha_; }
  std::int64_t num_samples() const { return num_samples_; }
  std::int64_t num_tokens() const {
    return static_cast<std::int64_t>(tokens_.size());
  }

 private:
  void scores_into(FeatureId v, std::int32_t excluded,
                   std::vector<double>& out) const;

  std::vector<FeatureId> tokens_;
  const PhiMatrix* phi_;
  std::vector<LabelId> active_;
  std::vector<double> alpha_;
  double alpha_sum_ = 0.0;
  std::vector<std::int32_t> z_;
  std::vector<std::int32_t> n_ml_;
  std::vector<double> acc_;
  std::int64_t num_samples_ = 0;
  Rng rng_;
  mutable std::vector<double> scratch_;
};

}  // namespace sllda

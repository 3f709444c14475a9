#include "sllda/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace sllda {

void Hyperparameters::validate(std::size_t num_labels) const {
  if (alpha.size() < num_labels) {
    throw ContractError("alpha vector smaller than the label set");
  }
  for (double a : alpha) {
    if (!(a > 0.0)) throw ContractError("alpha entries must be positive");
  }
  if (!(beta > 0.0)) throw ContractError("beta must be positive");
  if (iterations < 1) throw ContractError("iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) {
    throw ContractError("burn-in must satisfy 0 <= burn_in < iterations");
  }
  if (lag < 1) throw ContractError("lag must be >= 1");
  if (chains < 1) throw ContractError("chains must be >= 1");
  if (retained_samples() < 1) {
    throw ContractError("schedule retains no samples");
  }
}

PhiMatrix estimate_phi(std::span<const double> acc_lv, std::int64_t num_samples,
                       double beta, std::int32_t num_features,
                       std::int32_t num_labels) {
  if (num_samples < 1) throw ContractError("estimate_phi needs samples");
  PhiMatrix phi(num_features, num_labels);
  const double inv_s = 1.0 / static_cast<double>(num_samples);
  const double vbeta = static_cast<double>(num_features) * beta;
  for (LabelId l = 0; l < num_labels; ++l) {
    const double* row = acc_lv.data() + static_cast<std::size_t>(l) *
                                            static_cast<std::size_t>(num_features);
    double row_sum = 0.0;
    for (FeatureId v = 0; v < num_features; ++v) row_sum += row[v];
    const double denom = row_sum * inv_s + vbeta;
    for (FeatureId v = 0; v < num_features; ++v) {
      phi.at(v, l) = (row[v] * inv_s + beta) / denom;
    }
  }
  return phi;
}

std::vector<double> estimate_theta(std::span<const double> acc,
                                   std::int64_t num_samples,
                                   std::span<const double> alpha,
                                   std::int64_t num_tokens) {
  if (num_samples < 1) throw ContractError("estimate_theta needs samples");
  if (acc.size() != alpha.size()) {
    throw ContractError("estimate_theta dimension mismatch");
  }
  const double inv_s = 1.0 / static_cast<double>(num_samples);
  double alpha_sum = 0.0;
  for (double a : alpha) alpha_sum += a;
  const double denom = static_cast<double>(num_tokens) + alpha_sum;
  std::vector<double> theta(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) {
    theta[k] = (acc[k] * inv_s + alpha[k]) / denom;
  }
  return theta;
}

GibbsSampler::GibbsSampler(const Corpus& corpus, const Hyperparameters& hp,
                           std::vector<std::vector<LabelId>> active_per_doc,
                           std::uint64_t seed)
    : corpus_(&corpus),
      hp_(&hp),
      num_features_(corpus.num_features),
      num_labels_(corpus.num_labels),
      active_(std::move(active_per_doc)),
      rng_(seed) {
  hp.validate(static_cast<std::size_t>(num_labels_));
  if (active_.size() != corpus.size()) {
    throw ContractError("active label lists do not match the corpus");
  }
  n_lv_.assign(static_cast<std::size_t>(num_labels_) *
                   static_cast<std::size_t>(num_features_),
               0);
  n_l_total_.assign(static_cast<std::size_t>(num_labels_), 0);
  z_.resize(corpus.size());
  n_ml_.resize(corpus.size());
  for (std::size_t m = 0; m < corpus.size(); ++m) {
    const auto& active = active_[m];
    if (active.empty()) {
      throw ContractError("document " + std::to_string(m) +
                          " has an empty active label set");
    }
    for (LabelId l : active) {
      if (l < 0 || l >= num_labels_) {
        throw ContractError("active label out of range in document " +
                            std::to_string(m));
      }
    }
    const auto& tokens = corpus.documents[m].tokens;
    z_[m].resize(tokens.size());
    n_ml_[m].assign(active.size(), 0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto j = static_cast<std::int32_t>(rng_.below(active.size()));
      z_[m][i] = j;
      const LabelId l = active[static_cast<std::size_t>(j)];
      n_ml_[m][static_cast<std::size_t>(j)]++;
      n_lv_[static_cast<std::size_t>(l) * num_features_ + tokens[i]]++;
      n_l_total_[static_cast<std::size_t>(l)]++;
    }
  }
}

void GibbsSampler::scores_into(std::size_t m, FeatureId v,
                               std::int32_t excluded,
                               std::vector<double>& out) const {
  const auto& active = active_[m];
  const auto& n_ml = n_ml_[m];
  const double beta = hp_->beta;
  const double vbeta = static_cast<double>(num_features_) * beta;
  out.resize(active.size());
  for (std::size_t k = 0; k < active.size(); ++k) {
    const LabelId l = active[k];
    const double excl = (static_cast<std::int32_t>(k) == excluded) ? 1.0 : 0.0;
    const double nlv =
        n_lv_[static_cast<std::size_t>(l) * num_features_ + v] - excl;
    const double nl = static_cast<double>(n_l_total_[l]) - excl;
    const double nml = static_cast<double>(n_ml[k]) - excl;
    out[k] = (nlv + beta) / (nl + vbeta) * (nml + hp_->alpha[l]);
  }
}

void GibbsSampler::sweep() {
  std::vector<double>& cumulative = scratch_;
  for (std::size_t m = 0; m < z_.size(); ++m) {
    const auto& tokens = corpus_->documents[m].tokens;
    const auto& active = active_[m];
    auto& z = z_[m];
    auto& n_ml = n_ml_[m];
    if (active.size() == 1) continue;  // assignments are forced
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const FeatureId v = tokens[i];
      const std::int32_t old_j = z[i];
      const LabelId old_l = active[static_cast<std::size_t>(old_j)];
      n_lv_[static_cast<std::size_t>(old_l) * num_features_ + v]--;
      n_l_total_[static_cast<std::size_t>(old_l)]--;
      n_ml[static_cast<std::size_t>(old_j)]--;

      scores_into(m, v, -1, cumulative);
      double total = 0.0;
      for (double& w : cumulative) {
        total += w;
        w = total;
      }
      const auto new_j =
          static_cast<std::int32_t>(rng_.categorical_from_cumulative(cumulative));

      const LabelId new_l = active[static_cast<std::size_t>(new_j)];
      z[i] = new_j;
      n_lv_[static_cast<std::size_t>(new_l) * num_features_ + v]++;
      n_l_total_[static_cast<std::size_t>(new_l)]++;
      n_ml[static_cast<std::size_t>(new_j)]++;
    }
  }
}

void GibbsSampler::accumulate(ExpectedCounts& expected) const {
  std::vector<double> p;
  for (std::size_t m = 0; m < z_.size(); ++m) {
    const auto& tokens = corpus_->documents[m].tokens;
    const auto& active = active_[m];
    auto& acc_m = expected.acc_ml[m];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const FeatureId v = tokens[i];
      scores_into(m, v, z_[m][i], p);
      double total = 0.0;
      for (double w : p) total += w;
      const double inv = 1.0 / total;
      for (std::size_t k = 0; k < active.size(); ++k) {
        const double prob = p[k] * inv;
        expected.acc_lv[static_cast<std::size_t>(active[k]) * num_features_ + v] +=
            prob;
        acc_m[k] += prob;
      }
    }
  }
  expected.num_samples++;
}

ExpectedCounts GibbsSampler::make_expected_counts() const {
  ExpectedCounts expected;
  expected.acc_lv.assign(static_cast<std::size_t>(num_labels_) *
                             static_cast<std::size_t>(num_features_),
                         0.0);
  expected.acc_ml.resize(z_.size());
  for (std::size_t m = 0; m < z_.size(); ++m) {
    expected.acc_ml[m].assign(active_[m].size(), 0.0);
  }
  return expected;
}

ExpectedCounts GibbsSampler::run() {
  ExpectedCounts expected = make_expected_counts();
  for (int iter = 1; iter <= hp_->iterations; ++iter) {
    sweep();
    if (hp_->is_retained(iter)) accumulate(expected);
  }
  return expected;
}

std::vector<double> GibbsSampler::conditional(std::size_t m,
                                              std::size_t i) const {
  std::vector<double> p;
  scores_into(m, corpus_->documents[m].tokens[i], z_[m][i], p);
  double total = 0.0;
  for (double w : p) total += w;
  for (double& w : p) w /= total;
  return p;
}

std::int32_t GibbsSampler::doc_label_count(std::size_t m, LabelId l) const {
  const auto& active = active_[m];
  const auto it = std::lower_bound(active.begin(), active.end(), l);
  if (it == active.end() || *it != l) return 0;
  return n_ml_[m][static_cast<std::size_t>(it - active.begin())];
}

std::vector<LabelId> GibbsSampler::assignments(std::size_t m) const {
  std::vector<LabelId> out(z_[m].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = active_[m][static_cast<std::size_t>(z_[m][i])];
  }
  return out;
}

void GibbsSampler::force_assignments(std::size_t m,
                                     const std::vector<LabelId>& labels) {
  if (labels.size() != z_[m].size()) {
    throw ContractError("assignment length mismatch");
  }
  const auto& active = active_[m];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::lower_bound(active.begin(), active.end(), labels[i]);
    if (it == active.end() || *it != labels[i]) {
      throw ContractError("forced assignment outside the active set");
    }
    z_[m][i] = static_cast<std::int32_t>(it - active.begin());
  }
  rebuild_counts();
}

void GibbsSampler::rebuild_counts() {
  std::fill(n_lv_.begin(), n_lv_.end(), 0);
  std::fill(n_l_total_.begin(), n_l_total_.end(), 0);
  for (std::size_t m = 0; m < z_.size(); ++m) {
    n_ml_[m].assign(active_[m].size(), 0);
    const auto& tokens = corpus_->documents[m].tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const LabelId l = active_[m][static_cast<std::size_t>(z_[m][i])];
      n_ml_[m][static_cast<std::size_t>(z_[m][i])]++;
      n_lv_[static_cast<std::size_t>(l) * num_features_ + tokens[i]]++;
      n_l_total_[static_cast<std::size_t>(l)]++;
    }
  }
}

bool GibbsSampler::counts_consistent() const {
  std::vector<std::int32_t> lv(n_lv_.size(), 0);
  std::vector<std::int64_t> lt(n_l_total_.size(), 0);
  for (std::size_t m = 0; m < z_.size(); ++m) {
    const auto& tokens = corpus_->documents[m].tokens;
    std::vector<std::int32_t> ml(active_[m].size(), 0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto j = static_cast<std::size_t>(z_[m][i]);
      const LabelId l = active_[m][j];
      ml[j]++;
      lv[static_cast<std::size_t>(l) * num_features_ + tokens[i]]++;
      lt[static_cast<std::size_t>(l)]++;
    }
    if (ml != n_ml_[m]) return false;
    std::int64_t doc_total = 0;
    for (std::int32_t c : ml) doc_total += c;
    if (doc_total != corpus_->documents[m].token_count()) return false;
  }
  return lv == n_lv_ && lt == n_l_total_;
}

DocSampler::DocSampler(std::span<const FeatureId> tokens, const PhiMatrix& phi,
                       std::span<const LabelId> active,
                       std::vector<double> alpha, Rng rng)
    : tokens_(tokens.begin(), tokens.end()),
      phi_(&phi),
      active_(active.begin(), active.end()),
      alpha_(std::move(alpha)),
      rng_(rng) {
  if (active_.empty()) {
    throw ContractError("prediction requires a nonempty active label set");
  }
  if (alpha_.size() != active_.size()) {
    throw ContractError("alpha size does not match the active label set");
  }
  for (double a : alpha_) {
    if (!(a > 0.0)) throw ContractError("alpha entries must be positive");
    alpha_sum_ += a;
  }
  z_.resize(tokens_.size());
  n_ml_.assign(active_.size(), 0);
  acc_.assign(active_.size(), 0.0);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto j = static_cast<std::int32_t>(rng_.below(active_.size()));
    z_[i] = j;
    n_ml_[static_cast<std::size_t>(j)]++;
  }
}

void DocSampler::scores_into(FeatureId v, std::int32_t excluded,
                             std::vector<double>& out) const {
  const std::span<const double> row = phi_->feature_row(v);
  out.resize(active_.size());
  for (std::size_t k = 0; k < active_.size(); ++k) {
    const double excl = (static_cast<std::int32_t>(k) == excluded) ? 1.0 : 0.0;
    out[k] = row[static_cast<std::size_t>(active_[k])] *
             (static_cast<double>(n_ml_[k]) - excl + alpha_[k]);
  }
}

void DocSampler::sweep() {
  if (active_.size() == 1) return;
  std::vector<double>& cumulative = scratch_;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const FeatureId v = tokens_[i];
    const std::int32_t old_j = z_[i];
    n_ml_[static_cast<std::size_t>(old_j)]--;

    scores_into(v, -1, cumulative);
    double total = 0.0;
    for (double& w : cumulative) {
      total += w;
      w = total;
    }
    std::int32_t new_j;
    if (total > 0.0) {
      new_j =
          static_cast<std::int32_t>(rng_.categorical_from_cumulative(cumulative));
    } else {
      // Every active label has zero mass on this feature: fall back to a
      // uniform draw over the active set.
      new_j = static_cast<std::int32_t>(rng_.below(active_.size()));
    }
    z_[i] = new_j;
    n_ml_[static_cast<std::size_t>(new_j)]++;
  }
}

void DocSampler::accumulate() {
  std::vector<double>& p = scratch_;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    scores_into(tokens_[i], z_[i], p);
    double total = 0.0;
    for (double w : p) total += w;
    if (total > 0.0) {
      const double inv = 1.0 / total;
      for (std::size_t k = 0; k < acc_.size(); ++k) acc_[k] += p[k] * inv;
    } else {
      const double u = 1.0 / static_cast<double>(acc_.size());
      for (std::size_t k = 0; k < acc_.size(); ++k) acc_[k] += u;
    }
  }
  num_samples_++;
}

void DocSampler::replace_tokens(std::span<const FeatureId> tokens) {
  if (tokens.size() != tokens_.size()) {
    throw ContractError("replacement token stream has a different length");
  }
  std::copy(tokens.begin(), tokens.end(), tokens_.begin());
}

void DocSampler::set_alpha(std::vector<double> alpha) {
  if (alpha.size() != active_.size()) {
    throw ContractError("alpha size does not match the active label set");
  }
  alpha_ = std::move(alpha);
  alpha_sum_ = 0.0;
  for (double a : alpha_) {
    if (!(a > 0.0)) throw ContractError("alpha entries must be positive");
    alpha_sum_ += a;
  }
}

std::vector<double> DocSampler::conditional(std::size_t i) const {
  std::vector<double> p;
  scores_into(tokens_[i], z_[i], p);
  double total = 0.0;
  for (double w : p) total += w;
  if (total > 0.0) {
    for (double& w : p) w /= total;
  } else {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
  }
  return p;
}

std::vector<double> DocSampler::theta() const {
  return estimate_theta(acc_, num_samples_, alpha_, num_tokens());
}

std::vector<double> DocSampler::theta_from_counts() const {
  std::vector<double> theta(active_.size());
  const double denom = static_cast<double>(num_tokens()) + alpha_sum_;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    theta[k] = (static_cast<double>(n_ml_[k]) + alpha_[k]) / denom;
  }
  return theta;
}

}  // namespace sllda

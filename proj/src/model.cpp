#include "sllda/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sllda/parallel.hpp"

namespace sllda {
namespace {

namespace fs = std::filesystem;

// Accumulated entries below this magnitude are dropped at save time.
constexpr double kSaveEpsilon = 1e-8;
// Salt separating the auxiliary sampler's stream from the document stream.
constexpr std::uint64_t kAuxStreamSalt = 0x9D2C5680A5A5A5A5ull;

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failure: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string checksum_hex(const std::string& data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return std::string(buf);
}

std::vector<double> dep_alpha_over(std::span<const LabelId> labels,
                                   std::span<const double> theta_prime,
                                   const PhiMatrix& aux_phi, double eta,
                                   double alpha_base) {
  std::vector<double> alpha(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto row = aux_phi.feature_row(labels[k]);
    double dot = 0.0;
    for (std::size_t t = 0; t < theta_prime.size(); ++t) {
      dot += theta_prime[t] * row[t];
    }
    alpha[k] = eta * dot + alpha_base;
  }
  return alpha;
}

struct DepContext {
  const PhiMatrix* aux_phi = nullptr;  // label-major over topics
  std::vector<LabelId> topics;
  std::vector<double> topic_alpha;
  double eta = 120.0;
  double alpha_base = 0.0;
  int inner_sweeps = 5;
};

DocScores infer_document(const SparseDocument& doc, const PhiMatrix& phi,
                         std::span<const LabelId> active,
                         const std::vector<double>& initial_alpha,
                         const PredictionConfig& cfg, const DepContext* dep) {
  const std::size_t num_active = active.size();
  std::vector<double> merged_acc(num_active, 0.0);
  std::vector<double> alpha_estimate(num_active, 0.0);
  std::int64_t merged_samples = 0;

  for (int c = 0; c < cfg.schedule.chains; ++c) {
    const std::uint64_t doc_seed = derive_stream(
        cfg.seed ^ static_cast<std::uint64_t>(c),
        static_cast<std::uint64_t>(doc.doc_id));
    DocSampler sampler(doc.tokens, phi, active, initial_alpha, Rng(doc_seed));
    if (dep == nullptr) {
      for (int iter = 1; iter <= cfg.schedule.iterations; ++iter) {
        sampler.sweep();
        if (cfg.schedule.is_retained(iter)) sampler.accumulate();
      }
    } else {
      // Alternate between inferring the auxiliary topic mixture of the
      // label-assignment pseudo-document and sampling the document with the
      // induced asymmetric prior.
      std::vector<FeatureId> pseudo(doc.tokens.size());
      for (std::size_t i = 0; i < pseudo.size(); ++i) {
        pseudo[i] = sampler.assignment_label(i);
      }
      DocSampler aux(pseudo, *dep->aux_phi, dep->topics, dep->topic_alpha,
                     Rng(splitmix64(doc_seed ^ kAuxStreamSalt)));
      for (int iter = 1; iter <= cfg.schedule.iterations; ++iter) {
        for (std::size_t i = 0; i < pseudo.size(); ++i) {
          pseudo[i] = sampler.assignment_label(i);
        }
        aux.replace_tokens(pseudo);
        for (int s = 0; s < dep->inner_sweeps; ++s) aux.sweep();
        const std::vector<double> theta_prime = aux.theta_from_counts();
        sampler.set_alpha(dep_alpha_over(active, theta_prime, *dep->aux_phi,
                                         dep->eta, dep->alpha_base));
        sampler.sweep();
        if (cfg.schedule.is_retained(iter)) sampler.accumulate();
      }
    }
    const auto acc = sampler.acc();
    const auto alpha = sampler.alpha();
    for (std::size_t k = 0; k < num_active; ++k) {
      merged_acc[k] += acc[k];
      alpha_estimate[k] += alpha[k];
    }
    merged_samples += sampler.num_samples();
  }

  const double inv_chains = 1.0 / static_cast<double>(cfg.schedule.chains);
  for (double& a : alpha_estimate) a *= inv_chains;
  const std::vector<double> theta = estimate_theta(
      merged_acc, merged_samples, alpha_estimate, doc.token_count());

  DocScores out;
  out.doc_id = doc.doc_id;
  out.ranked.reserve(num_active);
  for (std::size_t k = 0; k < num_active; ++k) {
    out.ranked.emplace_back(active[k], theta[k]);
  }
  std::sort(out.ranked.begin(), out.ranked.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return out;
}

void check_compatible(const TrainedModel& model, const Corpus& test) {
  if (model.num_features != test.num_features) {
    throw ValueError("model expects " + std::to_string(model.num_features) +
                     " features but corpus declares " +
                     std::to_string(test.num_features));
  }
  if (model.num_labels != test.num_labels) {
    throw ValueError("model expects " + std::to_string(model.num_labels) +
                     " labels but corpus declares " +
                     std::to_string(test.num_labels));
  }
  if (model.num_samples < 1) {
    throw ContractError("model has no retained samples");
  }
}

std::vector<LabelId> identity_labels(std::int32_t n) {
  std::vector<LabelId> out(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

ScoreMatrix predict_full_label(const TrainedModel& model, const Corpus& test,
                               const PredictionConfig& cfg,
                               const std::vector<double>& alpha,
                               const DepContext* dep, Method method) {
  check_compatible(model, test);
  const PhiMatrix phi = model.phi();
  const std::vector<LabelId> active = identity_labels(model.num_labels);

  ScoreMatrix scores;
  scores.method = method;
  scores.docs.resize(test.size());
  run_parallel(test.size(), cfg.threads, [&](std::size_t m) {
    scores.docs[m] =
        infer_document(test.documents[m], phi, active, alpha, cfg, dep);
  });
  return scores;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::kLlda:
      return "llda";
    case Method::kPrior:
      return "prior";
    case Method::kDep:
      return "dep";
    case Method::kSubset:
      return "subset";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "llda") return Method::kLlda;
  if (name == "prior") return Method::kPrior;
  if (name == "dep") return Method::kDep;
  if (name == "subset") return Method::kSubset;
  return std::nullopt;
}

PredictionConfig default_prediction_config(Method method) {
  PredictionConfig cfg;
  cfg.method = method;
  cfg.alpha_sum = 30.0;
  cfg.eta = method == Method::kDep ? 120.0 : 50.0;
  cfg.neighbors = 10;
  cfg.dep_inner_sweeps = 5;
  cfg.schedule.iterations = 200;
  cfg.schedule.burn_in = 50;
  cfg.schedule.lag = 5;
  cfg.schedule.chains = 1;
  return cfg;
}

Hyperparameters default_train_schedule(std::int32_t num_labels) {
  Hyperparameters hp;
  hp.alpha.assign(static_cast<std::size_t>(num_labels),
                  50.0 / static_cast<double>(num_labels));
  hp.beta = 0.01;
  hp.iterations = 200;
  hp.burn_in = 50;
  hp.lag = 5;
  hp.chains = 1;
  return hp;
}

TrainedModel train_llda(const Corpus& train, const Hyperparameters& hp,
                        std::uint64_t seed, const SweepCallback& on_sweep) {
  if (train.documents.empty()) {
    throw ContractError("training corpus is empty");
  }
  std::vector<std::vector<LabelId>> active(train.size());
  for (std::size_t m = 0; m < train.size(); ++m) {
    active[m] = train.documents[m].labels;
    if (active[m].empty()) {
      throw ContractError("training document " + std::to_string(m) +
                          " has no labels");
    }
  }

  TrainedModel model;
  model.num_features = train.num_features;
  model.num_labels = train.num_labels;
  model.num_train_docs = static_cast<std::int64_t>(train.size());
  model.beta = hp.beta;
  double alpha_sum = 0.0;
  for (double a : hp.alpha) alpha_sum += a;
  model.train_alpha_sum = alpha_sum;
  model.label_frequencies = train.label_frequencies;
  model.acc_lv.assign(static_cast<std::size_t>(train.num_labels) *
                          static_cast<std::size_t>(train.num_features),
                      0.0);
  model.num_samples = 0;

  // Chain c runs on seed ^ c; expected counts are merged before estimation.
  for (int c = 0; c < hp.chains; ++c) {
    GibbsSampler sampler(train, hp, active,
                         seed ^ static_cast<std::uint64_t>(c));
    ExpectedCounts expected = sampler.make_expected_counts();
    for (int iter = 1; iter <= hp.iterations; ++iter) {
      const auto start = std::chrono::steady_clock::now();
      sampler.sweep();
      if (hp.is_retained(iter)) sampler.accumulate(expected);
      if (on_sweep) {
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        on_sweep(iter, elapsed.count());
      }
    }
    for (std::size_t i = 0; i < model.acc_lv.size(); ++i) {
      model.acc_lv[i] += expected.acc_lv[i];
    }
    model.num_samples += expected.num_samples;
  }
  return model;
}

DepAuxModel train_dep_aux(const Corpus& train, std::int32_t num_topics,
                          const Hyperparameters& schedule, std::uint64_t seed) {
  if (num_topics < 1) throw ContractError("topic count must be >= 1");
  // Pseudo-corpus whose feature tokens are the label ids of each instance.
  Corpus pseudo;
  pseudo.num_features = train.num_labels;
  pseudo.num_labels = num_topics;
  pseudo.documents.reserve(train.size());
  for (const SparseDocument& doc : train.documents) {
    SparseDocument p;
    p.doc_id = doc.doc_id;
    for (LabelId l : doc.labels) {
      p.features.emplace_back(l, 1.0);
      p.tokens.push_back(l);
    }
    pseudo.documents.push_back(std::move(p));
  }
  pseudo.refresh_statistics();

  Hyperparameters hp = schedule;
  if (hp.alpha.empty()) {
    hp.alpha.assign(static_cast<std::size_t>(num_topics), 0.1);
  }

  std::vector<std::vector<LabelId>> active(
      pseudo.size(), identity_labels(num_topics));

  DepAuxModel aux;
  aux.num_topics = num_topics;
  aux.num_labels = train.num_labels;
  aux.alpha = hp.alpha[0];
  aux.beta = hp.beta;
  aux.acc_tl.assign(static_cast<std::size_t>(num_topics) *
                        static_cast<std::size_t>(train.num_labels),
                    0.0);
  aux.num_samples = 0;
  for (int c = 0; c < hp.chains; ++c) {
    GibbsSampler sampler(pseudo, hp, active,
                         seed ^ static_cast<std::uint64_t>(c));
    ExpectedCounts expected = sampler.run();
    for (std::size_t i = 0; i < aux.acc_tl.size(); ++i) {
      aux.acc_tl[i] += expected.acc_lv[i];
    }
    aux.num_samples += expected.num_samples;
  }
  return aux;
}

std::vector<double> prior_alpha(const std::vector<double>& label_frequencies,
                                double eta, double alpha_base) {
  if (!(eta > 0.0) || !(alpha_base > 0.0)) {
    throw ContractError("eta and alpha_base must be positive");
  }
  std::vector<double> alpha(label_frequencies.size());
  for (std::size_t l = 0; l < alpha.size(); ++l) {
    alpha[l] = eta * label_frequencies[l] + alpha_base;
  }
  return alpha;
}

std::vector<double> dep_alpha(std::span<const double> theta_prime,
                              const PhiMatrix& aux_phi, double eta,
                              double alpha_base) {
  if (static_cast<std::int32_t>(theta_prime.size()) != aux_phi.num_labels()) {
    throw ContractError("theta' length does not match the topic count");
  }
  const std::vector<LabelId> all = identity_labels(aux_phi.num_features());
  return dep_alpha_over(all, theta_prime, aux_phi, eta, alpha_base);
}

ScoreMatrix predict_llda(const TrainedModel& model, const Corpus& test,
                         const PredictionConfig& cfg) {
  const std::vector<double> alpha(
      static_cast<std::size_t>(model.num_labels),
      cfg.alpha_sum / static_cast<double>(model.num_labels));
  return predict_full_label(model, test, cfg, alpha, nullptr, Method::kLlda);
}

ScoreMatrix predict_prior(const TrainedModel& model, const Corpus& test,
                          const PredictionConfig& cfg) {
  const std::vector<double> alpha =
      prior_alpha(model.label_frequencies, cfg.eta,
                  cfg.alpha_sum / static_cast<double>(model.num_labels));
  return predict_full_label(model, test, cfg, alpha, nullptr, Method::kPrior);
}

ScoreMatrix predict_dep(const TrainedModel& model, const DepAuxModel& aux,
                        const Corpus& test, const PredictionConfig& cfg) {
  if (aux.num_labels != model.num_labels) {
    throw ContractError("auxiliary model label count mismatch");
  }
  const PhiMatrix aux_phi = aux.phi();
  DepContext dep;
  dep.aux_phi = &aux_phi;
  dep.topics = identity_labels(aux.num_topics);
  dep.topic_alpha.assign(static_cast<std::size_t>(aux.num_topics), aux.alpha);
  dep.eta = cfg.eta;
  dep.alpha_base = cfg.alpha_sum / static_cast<double>(model.num_labels);
  dep.inner_sweeps = cfg.dep_inner_sweeps;
  const std::vector<double> alpha(
      static_cast<std::size_t>(model.num_labels), dep.alpha_base);
  return predict_full_label(model, test, cfg, alpha, &dep, Method::kDep);
}

ScoreMatrix predict_subset(const TrainedModel& model, const Corpus& test,
                           const TfIdfIndex& index, const Corpus& train,
                           const PredictionConfig& cfg) {
  check_compatible(model, test);
  const PhiMatrix phi = model.phi();
  const double alpha_base =
      cfg.alpha_sum / static_cast<double>(model.num_labels);

  ScoreMatrix scores;
  scores.method = Method::kSubset;
  scores.docs.resize(test.size());
  run_parallel(test.size(), cfg.threads, [&](std::size_t m) {
    const CandidateSet cs =
        candidate_labels(index, train, test.documents[m], cfg.neighbors);
    const std::vector<double> alpha(cs.labels.size(), alpha_base);
    scores.docs[m] =
        infer_document(test.documents[m], phi, cs.labels, alpha, cfg, nullptr);
    scores.docs[m].candidates = cs.labels;
  });
  return scores;
}

ScoreMatrix predict_with_candidates(
    const TrainedModel& model, const Corpus& test,
    const std::vector<std::vector<LabelId>>& candidates,
    const PredictionConfig& cfg) {
  check_compatible(model, test);
  if (candidates.size() != test.size()) {
    throw ContractError("candidate list count does not match the test corpus");
  }
  const PhiMatrix phi = model.phi();
  const double alpha_base =
      cfg.alpha_sum / static_cast<double>(model.num_labels);

  ScoreMatrix scores;
  scores.method = Method::kSubset;
  scores.docs.resize(test.size());
  run_parallel(test.size(), cfg.threads, [&](std::size_t m) {
    const std::vector<LabelId>& cand = candidates[m];
    if (cand.empty()) {
      throw ValueError("empty candidate set for document " +
                       std::to_string(m));
    }
    for (LabelId l : cand) {
      if (l < 0 || l >= model.num_labels) {
        throw ValueError("candidate label out of range for document " +
                         std::to_string(m));
      }
    }
    const std::vector<double> alpha(cand.size(), alpha_base);
    scores.docs[m] =
        infer_document(test.documents[m], phi, cand, alpha, cfg, nullptr);
    scores.docs[m].candidates = cand;
  });
  return scores;
}

void save_model(const TrainedModel& model, const std::string& dir) {
  fs::create_directories(dir);

  std::string counts;
  for (LabelId l = 0; l < model.num_labels; ++l) {
    for (FeatureId v = 0; v < model.num_features; ++v) {
      const double value =
          model.acc_lv[static_cast<std::size_t>(l) * model.num_features + v];
      if (std::abs(value) < kSaveEpsilon) continue;
      counts += std::to_string(l);
      counts += ' ';
      counts += std::to_string(v);
      counts += ' ';
      counts += format_double(value);
      counts += '\n';
    }
  }
  std::string freq;
  for (double f : model.label_frequencies) {
    freq += format_double(f);
    freq += '\n';
  }

  std::string meta;
  meta += "format=sllda-model\n";
  meta += "version=" + std::to_string(kModelFormatVersion) + "\n";
  meta += "type=main\n";
  meta += "num_features=" + std::to_string(model.num_features) + "\n";
  meta += "num_labels=" + std::to_string(model.num_labels) + "\n";
  meta += "num_train_docs=" + std::to_string(model.num_train_docs) + "\n";
  meta += "beta=" + format_double(model.beta) + "\n";
  meta += "train_alpha_sum=" + format_double(model.train_alpha_sum) + "\n";
  meta += "num_samples=" + std::to_string(model.num_samples) + "\n";
  meta += "counts_checksum=" + checksum_hex(counts) + "\n";
  meta += "freq_checksum=" + checksum_hex(freq) + "\n";

  write_file_atomic(dir + "/counts", counts);
  write_file_atomic(dir + "/freq", freq);
  write_file_atomic(dir + "/meta", meta);
}

namespace {

std::map<std::string, std::string> parse_meta(const std::string& content,
                                              const std::string& path) {
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ModelFormatError("malformed meta line in " + path);
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& require_key(const std::map<std::string, std::string>& kv,
                               const std::string& key,
                               const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw ModelFormatError("missing key '" + key + "' in " + path);
  }
  return it->second;
}

void check_header(const std::map<std::string, std::string>& kv,
                  const std::string& expected_type, const std::string& path) {
  if (require_key(kv, "format", path) != "sllda-model") {
    throw ModelFormatError("bad magic in " + path +
                           ": not a model meta file");
  }
  int version = 0;
  if (!parse_int(require_key(kv, "version", path), version) ||
      version != kModelFormatVersion) {
    throw ModelFormatError("unsupported model version in " + path);
  }
  if (require_key(kv, "type", path) != expected_type) {
    throw ModelFormatError("unexpected model type in " + path);
  }
}

void parse_triplets(const std::string& content, const std::string& path,
                    std::int32_t rows, std::int32_t cols,
                    std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
             0.0);
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string_view line =
        std::string_view(content).substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::size_t s1 = line.find(' ');
    const std::size_t s2 = line.find(' ', s1 + 1);
    std::int32_t r, c;
    double value;
    if (s1 == std::string_view::npos || s2 == std::string_view::npos ||
        !parse_int(line.substr(0, s1), r) ||
        !parse_int(line.substr(s1 + 1, s2 - s1 - 1), c) ||
        !parse_double(line.substr(s2 + 1), value)) {
      throw ModelFormatError("malformed counts line " +
                             std::to_string(line_no) + " in " + path);
    }
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw ModelFormatError("counts index out of range at line " +
                             std::to_string(line_no) + " in " + path);
    }
    out[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
        static_cast<std::size_t>(c)] = value;
  }
}

}  // namespace

TrainedModel load_model(const std::string& dir) {
  const std::string meta_path = dir + "/meta";
  const auto kv = parse_meta(read_file(meta_path), meta_path);
  check_header(kv, "main", meta_path);

  TrainedModel model;
  if (!parse_int(require_key(kv, "num_features", meta_path),
                 model.num_features) ||
      !parse_int(require_key(kv, "num_labels", meta_path), model.num_labels) ||
      !parse_int(require_key(kv, "num_train_docs", meta_path),
                 model.num_train_docs) ||
      !parse_int(require_key(kv, "num_samples", meta_path),
                 model.num_samples) ||
      !parse_double(require_key(kv, "beta", meta_path), model.beta) ||
      !parse_double(require_key(kv, "train_alpha_sum", meta_path),
                    model.train_alpha_sum)) {
    throw ModelFormatError("malformed numeric field in " + meta_path);
  }
  if (model.num_features < 1 || model.num_labels < 1 ||
      model.num_samples < 1) {
    throw ModelFormatError("inconsistent dimensions in " + meta_path);
  }

  const std::string counts = read_file(dir + "/counts");
  if (checksum_hex(counts) != require_key(kv, "counts_checksum", meta_path)) {
    throw ModelFormatError("counts checksum mismatch in " + dir);
  }
  parse_triplets(counts, dir + "/counts", model.num_labels,
                 model.num_features, model.acc_lv);

  const std::string freq = read_file(dir + "/freq");
  if (checksum_hex(freq) != require_key(kv, "freq_checksum", meta_path)) {
    throw ModelFormatError("freq checksum mismatch in " + dir);
  }
  model.label_frequencies.clear();
  model.label_frequencies.reserve(static_cast<std::size_t>(model.num_labels));
  std::size_t pos = 0;
  while (pos < freq.size()) {
    std::size_t eol = freq.find('\n', pos);
    if (eol == std::string::npos) eol = freq.size();
    const std::string_view line = std::string_view(freq).substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    double f;
    if (!parse_double(line, f)) {
      throw ModelFormatError("malformed freq entry in " + dir);
    }
    model.label_frequencies.push_back(f);
  }
  if (model.label_frequencies.size() !=
      static_cast<std::size_t>(model.num_labels)) {
    throw ModelFormatError("freq entry count mismatch in " + dir);
  }
  return model;
}

void save_aux_model(const DepAuxModel& aux, const std::string& dir) {
  const std::string aux_dir = dir + "/aux";
  fs::create_directories(aux_dir);

  std::string counts;
  for (std::int32_t t = 0; t < aux.num_topics; ++t) {
    for (LabelId l = 0; l < aux.num_labels; ++l) {
      const double value =
          aux.acc_tl[static_cast<std::size_t>(t) * aux.num_labels + l];
      if (std::abs(value) < kSaveEpsilon) continue;
      counts += std::to_string(t);
      counts += ' ';
      counts += std::to_string(l);
      counts += ' ';
      counts += format_double(value);
      counts += '\n';
    }
  }

  std::string meta;
  meta += "format=sllda-model\n";
  meta += "version=" + std::to_string(kModelFormatVersion) + "\n";
  meta += "type=aux\n";
  meta += "num_topics=" + std::to_string(aux.num_topics) + "\n";
  meta += "num_labels=" + std::to_string(aux.num_labels) + "\n";
  meta += "alpha=" + format_double(aux.alpha) + "\n";
  meta += "beta=" + format_double(aux.beta) + "\n";
  meta += "num_samples=" + std::to_string(aux.num_samples) + "\n";
  meta += "counts_checksum=" + checksum_hex(counts) + "\n";

  write_file_atomic(aux_dir + "/counts", counts);
  write_file_atomic(aux_dir + "/meta", meta);
}

std::optional<DepAuxModel> load_aux_model(const std::string& dir) {
  const std::string meta_path = dir + "/aux/meta";
  if (!fs::exists(meta_path)) return std::nullopt;
  const auto kv = parse_meta(read_file(meta_path), meta_path);
  check_header(kv, "aux", meta_path);

  DepAuxModel aux;
  if (!parse_int(require_key(kv, "num_topics", meta_path), aux.num_topics) ||
      !parse_int(require_key(kv, "num_labels", meta_path), aux.num_labels) ||
      !parse_int(require_key(kv, "num_samples", meta_path), aux.num_samples) ||
      !parse_double(require_key(kv, "alpha", meta_path), aux.alpha) ||
      !parse_double(require_key(kv, "beta", meta_path), aux.beta)) {
    throw ModelFormatError("malformed numeric field in " + meta_path);
  }
  const std::string counts = read_file(dir + "/aux/counts");
  if (checksum_hex(counts) != require_key(kv, "counts_checksum", meta_path)) {
    throw ModelFormatError("counts checksum mismatch in " + dir + "/aux");
  }
  parse_triplets(counts, dir + "/aux/counts", aux.num_topics, aux.num_labels,
                 aux.acc_tl);
  return aux;
}

void write_scores(const ScoreMatrix& scores, const std::string& path) {
  std::string out;
  for (const DocScores& doc : scores.docs) {
    out += std::to_string(doc.doc_id);
    out += '\t';
    bool first = true;
    for (const auto& [label, score] : doc.ranked) {
      if (!first) out += ' ';
      out += std::to_string(label);
      out += ':';
      out += format_fixed6(score);
      first = false;
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

ScoreMatrix read_scores(const std::string& path) {
  const std::string content = read_file(path);
  ScoreMatrix scores;
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line = std::string_view(content).substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;

    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("score line missing TAB separator", line_no);
    }
    DocScores doc;
    if (!parse_int(line.substr(0, tab), doc.doc_id)) {
      throw ParseError("bad doc id in score file", line_no);
    }
    std::string_view rest = line.substr(tab + 1);
    while (!rest.empty()) {
      const std::size_t space = rest.find(' ');
      const std::string_view entry =
          space == std::string_view::npos ? rest : rest.substr(0, space);
      rest = space == std::string_view::npos ? std::string_view()
                                             : rest.substr(space + 1);
      if (entry.empty()) continue;
      const std::size_t colon = entry.find(':');
      LabelId label;
      double score;
      if (colon == std::string_view::npos ||
          !parse_int(entry.substr(0, colon), label) ||
          !parse_double(entry.substr(colon + 1), score)) {
        throw ParseError("bad score entry '" + std::string(entry) + "'",
                         line_no);
      }
      doc.ranked.emplace_back(label, score);
    }
    scores.docs.push_back(std::move(doc));
  }
  return scores;
}

void write_candidates(const std::vector<CandidateSet>& candidates,
                      const std::string& path) {
  std::string out;
  for (const CandidateSet& cs : candidates) {
    out += std::to_string(cs.test_doc_id);
    out += '\t';
    bool first = true;
    for (const Neighbor& nb : cs.neighbors) {
      if (!first) out += ',';
      out += std::to_string(nb.doc_id);
      out += ':';
      out += format_fixed6(nb.similarity);
      first = false;
    }
    out += '\t';
    first = true;
    for (LabelId l : cs.labels) {
      if (!first) out += ',';
      out += std::to_string(l);
      first = false;
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<CandidateSet> read_candidates(const std::string& path) {
  const std::string content = read_file(path);
  std::vector<CandidateSet> out;
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line = std::string_view(content).substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;

    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 =
        tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab1 == std::string_view::npos || tab2 == std::string_view::npos) {
      throw ParseError("candidate line needs two TAB separators", line_no);
    }
    CandidateSet cs;
    if (!parse_int(line.substr(0, tab1), cs.test_doc_id)) {
      throw ParseError("bad doc id in candidates file", line_no);
    }
    const std::string_view neighbors = line.substr(tab1 + 1, tab2 - tab1 - 1);
    if (!neighbors.empty()) {
      std::string_view rest = neighbors;
      while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        const std::string_view entry =
            comma == std::string_view::npos ? rest : rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view()
                                               : rest.substr(comma + 1);
        const std::size_t colon = entry.find(':');
        Neighbor nb;
        if (colon == std::string_view::npos ||
            !parse_int(entry.substr(0, colon), nb.doc_id) ||
            !parse_double(entry.substr(colon + 1), nb.similarity)) {
          throw ParseError("bad neighbor entry '" + std::string(entry) + "'",
                           line_no);
        }
        cs.neighbors.push_back(nb);
      }
    }
    std::string_view labels = line.substr(tab2 + 1);
    while (!labels.empty()) {
      const std::size_t comma = labels.find(',');
      const std::string_view entry =
          comma == std::string_view::npos ? labels : labels.substr(0, comma);
      labels = comma == std::string_view::npos ? std::string_view()
                                               : labels.substr(comma + 1);
      if (entry.empty()) continue;
      LabelId l;
      if (!parse_int(entry, l)) {
        throw ParseError("bad candidate label '" + std::string(entry) + "'",
                         line_no);
      }
      cs.labels.push_back(l);
    }
    std::sort(cs.labels.begin(), cs.labels.end());
    cs.labels.erase(std::unique(cs.labels.begin(), cs.labels.end()),
                    cs.labels.end());
    out.push_back(std::move(cs));
  }
  return out;
}

}  // namespace sllda

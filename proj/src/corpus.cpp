#include "sllda/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sllda {
namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

// Splits on single spaces; consecutive spaces yield empty fields, which the
// label-less line convention relies on.
std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

void parse_labels(std::string_view field, std::int32_t num_labels,
                  std::int64_t line_no, std::vector<LabelId>& out) {
  out.clear();
  if (field.empty()) return;
  for (std::string_view tok : split(field, ',')) {
    LabelId l;
    if (tok.empty() || !parse_int(tok, l)) {
      throw ParseError("bad label id '" + std::string(tok) + "'", line_no);
    }
    if (l < 0 || l >= num_labels) {
      throw BoundsError("label id " + std::to_string(l) + " out of range [0, " +
                            std::to_string(num_labels) + ")",
                        line_no);
    }
    out.push_back(l);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

}  // namespace

bool SparseDocument::has_label(LabelId l) const {
  return std::binary_search(labels.begin(), labels.end(), l);
}

void Corpus::refresh_statistics() {
  label_doc_counts.assign(static_cast<std::size_t>(num_labels), 0);
  std::int64_t total_labels = 0;
  for (const SparseDocument& doc : documents) {
    total_labels += static_cast<std::int64_t>(doc.labels.size());
    for (LabelId l : doc.labels) label_doc_counts[static_cast<std::size_t>(l)]++;
  }
  label_frequencies.assign(static_cast<std::size_t>(num_labels), 0.0);
  if (!documents.empty()) {
    const double m = static_cast<double>(documents.size());
    for (std::size_t l = 0; l < label_frequencies.size(); ++l) {
      label_frequencies[l] = static_cast<double>(label_doc_counts[l]) / m;
    }
    cardinality = static_cast<double>(total_labels) / m;
  } else {
    cardinality = 0.0;
  }
}

std::int64_t tokenize(double value, std::int64_t cap) {
  if (value < 0.0) throw ValueError("negative feature value");
  std::int64_t n;
  if (value >= 0.5) {
    n = static_cast<std::int64_t>(std::floor(value + 0.5));
  } else if (value > 0.0) {
    n = 1;  // presence floor: every observed feature yields a token
  } else {
    n = 0;
  }
  return std::min(n, cap);
}

Corpus load_corpus(const std::string& path, CorpusRole role,
                   const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open data file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  Corpus corpus;
  std::int64_t line_no = 0;
  std::int64_t expected_docs = -1;

  std::size_t pos = 0;
  std::vector<LabelId> labels;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line = trim_cr(
        std::string_view(content).substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;

    if (line_no == 1) {
      const auto fields = split(line, ' ');
      std::int64_t m;
      std::int32_t v, l;
      if (fields.size() != 3 || !parse_int(fields[0], m) ||
          !parse_int(fields[1], v) || !parse_int(fields[2], l) || m < 0 ||
          v <= 0 || l <= 0) {
        throw ParseError("malformed header, expected 'M V L'", line_no);
      }
      expected_docs = m;
      corpus.num_features = v;
      corpus.num_labels = l;
      continue;
    }

    if (line.empty() &&
        static_cast<std::int64_t>(line_no) - 2 >= expected_docs) {
      continue;  // trailing blank line(s)
    }
    if (line_no - 1 > expected_docs) {
      throw ParseError("more document lines than declared in header", line_no);
    }

    const auto fields = split(line, ' ');
    parse_labels(fields[0], corpus.num_labels, line_no, labels);

    SparseDocument doc;
    doc.labels = labels;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      std::string_view field = fields[i];
      if (field.empty()) continue;
      const std::size_t colon = field.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("expected 'feature:value', got '" +
                             std::string(field) + "'",
                         line_no);
      }
      FeatureId id;
      double value;
      if (!parse_int(field.substr(0, colon), id) ||
          !parse_double(field.substr(colon + 1), value)) {
        throw ParseError("bad feature entry '" + std::string(field) + "'",
                         line_no);
      }
      if (id < 0 || id >= corpus.num_features) {
        throw BoundsError("feature id " + std::to_string(id) +
                              " out of range [0, " +
                              std::to_string(corpus.num_features) + ")",
                          line_no);
      }
      if (value < 0.0) {
        throw ValueError("negative feature value " + format_double(value),
                         line_no);
      }
      if (value == 0.0) continue;  // zero entries are represented as absent
      doc.features.emplace_back(id, value);
    }
    std::sort(doc.features.begin(), doc.features.end());
    for (std::size_t i = 1; i < doc.features.size(); ++i) {
      if (doc.features[i].first == doc.features[i - 1].first) {
        throw ParseError(
            "duplicate feature id " + std::to_string(doc.features[i].first),
            line_no);
      }
    }
    for (const auto& [id, value] : doc.features) {
      const std::int64_t n = tokenize(value, options.max_tokens_per_feature);
      doc.tokens.insert(doc.tokens.end(), static_cast<std::size_t>(n), id);
    }

    if (role == CorpusRole::kTrain && doc.labels.empty()) {
      corpus.dropped_empty_label_docs++;
      continue;
    }
    doc.doc_id = static_cast<std::int64_t>(corpus.documents.size());
    corpus.documents.push_back(std::move(doc));
  }

  if (expected_docs < 0) throw ParseError("empty file, missing header", 1);
  const std::int64_t seen =
      static_cast<std::int64_t>(corpus.documents.size()) +
      corpus.dropped_empty_label_docs;
  if (seen != expected_docs) {
    throw ParseError("header declares " + std::to_string(expected_docs) +
                         " documents but file contains " + std::to_string(seen),
                     line_no);
  }

  corpus.refresh_statistics();
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write data file: " + tmp);
    out << corpus.size() << ' ' << corpus.num_features << ' '
        << corpus.num_labels << '\n';
    for (const SparseDocument& doc : corpus.documents) {
      bool first = true;
      for (LabelId l : doc.labels) {
        if (!first) out << ',';
        out << l;
        first = false;
      }
      for (const auto& [id, value] : doc.features) {
        out << ' ' << id << ':' << format_double(value);
      }
      out << '\n';
    }
    if (!out) throw IoError("write failure: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.num_documents = static_cast<std::int64_t>(corpus.size());
  s.num_features = corpus.num_features;
  s.num_labels = corpus.num_labels;
  s.cardinality = corpus.cardinality;
  std::int64_t nnz = 0;
  for (const SparseDocument& doc : corpus.documents) {
    s.total_tokens += doc.token_count();
    nnz += static_cast<std::int64_t>(doc.features.size());
  }
  std::int64_t total_positives = 0;
  for (std::int64_t c : corpus.label_doc_counts) total_positives += c;
  if (corpus.num_labels > 0) {
    s.avg_label_frequency =
        static_cast<double>(total_positives) / corpus.num_labels;
  }
  if (s.num_documents > 0 && corpus.num_features > 0) {
    s.vocabulary_density = static_cast<double>(nnz) /
                           (static_cast<double>(s.num_documents) *
                            static_cast<double>(corpus.num_features));
  }
  return s;
}

}  // namespace sllda

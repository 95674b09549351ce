// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pcr/corpus.hpp"
#include "pcr/error.hpp"
#include "pcr/textproc.hpp"

namespace pcr {

using EmbeddingVector = Eigen::VectorXd;

enum class TextField { facts, reasoning, both };

inline std::string field_text(const Document& doc, TextField field) {
  switch (field) {
    case TextField::facts:
      return doc.facts;
    case TextField::reasoning:
      return doc.reasoning;
    case TextField::both:
      return doc.facts + "\n\n" + doc.reasoning;
  }
  return {};
}

/// Cosine similarity; 0 when either vector is zero.
inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

/// Source of vectors for concept similarity, masked relevance and dense
/// retrieval. Text-based providers embed whatever text they are given;
/// keyed providers look vectors up by document id or concept string.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;
  /// `key` is the document id (or query key); `text` is its content.
  virtual EmbeddingVector embed_document(std::string_view key, std::string_view text) const = 0;
};

// ---------------------------------------------------------------------------
// TF-IDF

struct TfidfModel {
  std::map<std::string, std::size_t> vocabulary;  // term -> column, lexicographic
  std::vector<std::size_t> df;
  std::size_t num_docs = 0;

  double idf(std::size_t column) const {
    return std::log(static_cast<double>(num_docs) / static_cast<double>(df[column])) + 1.0;
  }
};

inline TfidfModel fit_tfidf(const Corpus& corpus, TextField field) {
  if (corpus.empty()) throw InvalidArgument("fit_tfidf: empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    std::vector<std::string> terms;
    for (auto& t : tokenize(field_text(doc, field))) terms.push_back(std::move(t.text));
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms) ++df[std::move(t)];
  }
  TfidfModel model;
  model.num_docs = corpus.size();
  model.df.reserve(df.size());
  for (const auto& [term, count] : df) {
    model.vocabulary.emplace(term, model.df.size());
    model.df.push_back(count);
  }
  return model;
}

class TfidfProvider final : public EmbeddingProvider {
 public:
  explicit TfidfProvider(TfidfModel model) : model_(std::move(model)) {
    idf_.reserve(model_.df.size());
    for (std::size_t c = 0; c < model_.df.size(); ++c) idf_.push_back(model_.idf(c));
  }

  std::size_t dim() const override { return model_.vocabulary.size(); }

  EmbeddingVector embed_text(std::string_view text) const override {
    EmbeddingVector v = EmbeddingVector::Zero(static_cast<Eigen::Index>(dim()));
    for (const auto& t : tokenize(text)) {
      const auto it = model_.vocabulary.find(t.text);
      if (it != model_.vocabulary.end()) v[static_cast<Eigen::Index>(it->second)] += 1.0;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] != 0.0) v[i] *= idf_[static_cast<std::size_t>(i)];
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
  }

  EmbeddingVector embed_document(std::string_view, std::string_view text) const override {
    return embed_text(text);
  }

  const TfidfModel& model() const { return model_; }

 private:
  TfidfModel model_;
  std::vector<double> idf_;
};

// ---------------------------------------------------------------------------
// Externally computed vectors

inline constexpr std::string_view kVectorsMagic = "pcr-vectors v1 dim=";

/// Vectors keyed by document id or normalized concept text, served as stored.
class ExternalVectors final : public EmbeddingProvider {
 public:
  explicit ExternalVectors(std::size_t dim) : dim_(dim) {}

  void insert(std::string key, EmbeddingVector v) {
    if (static_cast<std::size_t>(v.size()) != dim_) {
      throw InvalidArgument("vector for '" + key + "' has dimension " + std::to_string(v.size()) +
                            ", expected " + std::to_string(dim_));
    }
    if (!v.allFinite()) throw InvalidArgument("vector for '" + key + "' has non-finite entries");
    if (!vectors_.emplace(std::move(key), std::move(v)).second) {
      throw InvalidArgument("duplicate vector key");
    }
  }

  std::size_t dim() const override { return dim_; }

  const EmbeddingVector& lookup(std::string_view key) const {
    const auto it = vectors_.find(std::string(key));
    if (it == vectors_.end()) throw NotFoundError("no external vector for key '" + std::string(key) + "'");
    return it->second;
  }

  bool contains(std::string_view key) const { return vectors_.contains(std::string(key)); }

  EmbeddingVector embed_text(std::string_view text) const override { return lookup(text); }

  EmbeddingVector embed_document(std::string_view key, std::string_view) const override {
    return lookup(key);
  }

  const std::map<std::string, EmbeddingVector>& vectors() const { return vectors_; }

 private:
  std::size_t dim_;
  std::map<std::string, EmbeddingVector> vectors_;
};

inline ExternalVectors read_external_vectors(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kVectorsMagic)) {
    throw ParseError("vector file line 1: expected header 'pcr-vectors v1 dim=<D>'");
  }
  std::size_t dim = 0;
  const std::string_view dim_text = std::string_view(line).substr(kVectorsMagic.size());
  const auto [ptr, ec] = std::from_chars(dim_text.data(), dim_text.data() + dim_text.size(), dim);
  if (ec != std::errc{} || ptr != dim_text.data() + dim_text.size() || dim == 0) {
    throw ParseError("vector file line 1: invalid dimension '" + std::string(dim_text) + "'");
  }

  ExternalVectors out(dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const auto where = "vector file line " + std::to_string(lineno);
    if (tab == std::string::npos || tab == 0) throw ParseError(where + ": expected key<TAB>values");
    std::string key = line.substr(0, tab);

    std::vector<double> values;
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      double x = 0.0;
      const auto res = std::from_chars(p, end, x);
      if (res.ec != std::errc{}) throw ParseError(where + " ('" + key + "'): invalid number");
      values.push_back(x);
      p = res.ptr;
    }
    if (values.size() != dim) {
      throw ParseError(where + " ('" + key + "'): dimension " + std::to_string(values.size()) +
                       ", expected " + std::to_string(dim));
    }
    try {
      out.insert(std::move(key), Eigen::Map<const EmbeddingVector>(values.data(),
                                                                   static_cast<Eigen::Index>(dim)));
    } catch (const InvalidArgument& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

inline ExternalVectors load_external_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open vector file '" + path + "'");
  return read_external_vectors(in);
}

/// Shortest round-trip decimal form, so read(write(x)) is bit-exact.
inline void write_external_vectors(std::ostream& out, const ExternalVectors& vectors) {
  out << kVectorsMagic << vectors.dim() << '\n';
  char buf[64];
  for (const auto& [key, v] : vectors.vectors()) {
    out << key << '\t';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v[i]);
      if (i > 0) out << ' ';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

}  // namespace pcr

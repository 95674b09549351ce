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
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "pcr/concepts.hpp"
#include "pcr/corpus.hpp"
#include "pcr/embed.hpp"
#include "pcr/error.hpp"
#include "pcr/retrieve.hpp"
#include "pcr/textproc.hpp"

namespace pcr {

// ---------------------------------------------------------------------------
// Per-query metrics

namespace detail {

inline std::unordered_set<std::string_view> as_set(std::span<const std::string> ids) {
  return {ids.begin(), ids.end()};
}

}  // namespace detail

/// |top-k of run ∩ relevant| / |relevant|.
inline double recall_at_k(const RankedRun& run, std::span<const std::string> relevant, std::size_t k) {
  if (k < 1) throw InvalidArgument("recall_at_k: k must be >= 1");
  const auto rel = detail::as_set(relevant);
  if (rel.empty()) throw InvalidArgument("recall_at_k: empty relevant set");
  std::size_t hits = 0;
  const auto depth = std::min(k, run.results.size());
  for (std::size_t i = 0; i < depth; ++i) hits += rel.contains(run.results[i].id) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

/// Mean over relevant documents of precision at their rank; relevant
/// documents missing from the run contribute 0.
inline double average_precision(const RankedRun& run, std::span<const std::string> relevant) {
  const auto rel = detail::as_set(relevant);
  if (rel.empty()) throw InvalidArgument("average_precision: empty relevant set");
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    if (!rel.contains(run.results[i].id)) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(rel.size());
}

struct Coverage {
  double word_pct = 0.0;     // percent
  double concept_pct = 0.0;  // percent
};

/// Word- and phrase-level exact-match coverage of concepts against the
/// tokenized reasoning text.
inline Coverage concept_coverage(const std::vector<std::string>& concepts, std::string_view reasoning) {
  if (concepts.empty()) return {};
  std::vector<std::string> words;
  for (auto& t : tokenize(reasoning)) words.push_back(std::move(t.text));
  const std::unordered_set<std::string> vocab(words.begin(), words.end());

  std::unordered_set<std::string> concept_words;
  std::size_t covered_concepts = 0;
  for (const auto& c : concepts) {
    const auto phrase = tokenize(c);
    for (const auto& t : phrase) concept_words.insert(t.text);
    if (phrase.empty() || phrase.size() > words.size()) continue;
    for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
      bool match = true;
      for (std::size_t j = 0; match && j < phrase.size(); ++j) match = words[i + j] == phrase[j].text;
      if (match) {
        ++covered_concepts;
        break;
      }
    }
  }
  std::size_t covered_words = 0;
  for (const auto& w : concept_words) covered_words += vocab.contains(w) ? 1 : 0;

  Coverage out;
  out.word_pct = concept_words.empty() ? 0.0
                                   : 100.0 * static_cast<double>(covered_words) /
                                         static_cast<double>(concept_words.size());
  out.concept_pct = 100.0 * static_cast<double>(covered_concepts) / static_cast<double>(concepts.size());
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct QueryMetrics {
  std::string query_id;
  std::size_t num_relevant = 0;
  std::vector<double> recall;  // aligned with EvalReport::k_set
  double average_precision = 0.0;
};

struct EvalReport {
  std::string name;
  std::vector<std::size_t> k_set;
  std::vector<QueryMetrics> per_query;
  std::vector<double> mean_recall;
  double map = 0.0;
  std::vector<std::string> skipped;  // queries without in-pool labels
  std::string fingerprint;

  std::size_t query_count() const { return per_query.size(); }
};

/// Per-query Recall@k and AP against citation labels, plus macro means.
/// Queries with no in-pool labels are listed in `skipped` and excluded.
inline EvalReport evaluate_run_set(const std::vector<RankedRun>& runs, const Corpus& corpus,
                                   const std::vector<std::size_t>& k_set) {
  if (k_set.empty()) throw InvalidArgument("evaluate_run_set: empty k set");
  EvalReport report;
  report.k_set = k_set;
  report.mean_recall.assign(k_set.size(), 0.0);
  for (const auto& run : runs) {
    const auto labels = relevance_labels(corpus, run.query_id);
    if (labels.empty()) {
      report.skipped.push_back(run.query_id);
      continue;
    }
    QueryMetrics m{run.query_id, labels.size(), {}, average_precision(run, labels)};
    for (const auto k : k_set) m.recall.push_back(recall_at_k(run, labels, k));
    report.per_query.push_back(std::move(m));
  }
  if (!report.per_query.empty()) {
    const auto n = static_cast<double>(report.per_query.size());
    for (const auto& m : report.per_query) {
      for (std::size_t i = 0; i < k_set.size(); ++i) report.mean_recall[i] += m.recall[i];
      report.map += m.average_precision;
    }
    for (auto& r : report.mean_recall) r /= n;
    report.map /= n;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Experiment runner

enum class RetrieverKind { bm25, dense };

/// Where a row's query concepts come from.
enum class ConceptSource { none, imported_file, imported_plus_noise, extracted_oracle };

inline std::string_view row_key(ConceptSource s) {
  switch (s) {
    case ConceptSource::none:
      return "baseline";
    case ConceptSource::imported_file:
      return "imported";
    case ConceptSource::imported_plus_noise:
      return "noise";
    case ConceptSource::extracted_oracle:
      return "oracle";
  }
  return "";
}

inline std::optional<ConceptSource> parse_row_key(std::string_view key) {
  if (key == "baseline" || key == "none") return ConceptSource::none;
  if (key == "imported" || key == "imported-file") return ConceptSource::imported_file;
  if (key == "noise" || key == "imported-plus-noise") return ConceptSource::imported_plus_noise;
  if (key == "oracle" || key == "extracted-oracle") return ConceptSource::extracted_oracle;
  return std::nullopt;
}

/// Queries are the documents dated within [from, to] when either bound is
/// set, otherwise the latest `fraction` of the corpus.
struct EvalSlice {
  std::optional<Date> from;
  std::optional<Date> to;
  double fraction = 0.2;
};

struct ExperimentSetup {
  RetrieverKind retriever = RetrieverKind::bm25;
  Bm25Params bm25;
  /// Dense only. Null means TF-IDF fitted on the corpus facts. A keyed
  /// provider is queried with "<id>" for the baseline row and
  /// "<id>#<row>" for augmented rows.
  const EmbeddingProvider* dense_provider = nullptr;
  std::vector<ConceptSource> rows = {ConceptSource::none, ConceptSource::extracted_oracle};
  const ConceptMap* imported = nullptr;
  /// Precomputed oracle concepts; when null they are extracted from each
  /// query's reasoning with `tagger` and TF-IDF over the corpus reasoning.
  const ConceptMap* oracle = nullptr;
  const Tagger* tagger = nullptr;
  ExtractionOptions extraction;
  std::size_t noise_count = 5;
  std::size_t repeat = 1;
  std::vector<std::size_t> k_set = {50, 100, 500, 1000};
  std::uint64_t seed = 0;
  EvalSlice slice;
};

inline std::vector<std::string> evaluation_queries(const Corpus& corpus, const EvalSlice& slice) {
  std::vector<std::string> out;
  if (slice.from || slice.to) {
    for (const auto& d : corpus) {
      if (slice.from && d.date < *slice.from) continue;
      if (slice.to && *slice.to < d.date) continue;
      out.push_back(d.id);
    }
    return out;
  }
  if (!(slice.fraction > 0.0 && slice.fraction <= 1.0)) {
    throw ConfigError("evaluation fraction must be in (0, 1]");
  }
  const auto n = corpus.size();
  const auto take = static_cast<std::size_t>(std::ceil(slice.fraction * static_cast<double>(n)));
  for (std::size_t i = n - std::min(take, n); i < n; ++i) out.push_back(corpus[i].id);
  return out;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline std::string experiment_fingerprint(const ExperimentSetup& s) {
  std::ostringstream out;
  out << "retriever=" << (s.retriever == RetrieverKind::bm25 ? "bm25" : "dense");
  if (s.retriever == RetrieverKind::bm25) {
    out << " k1=" << detail::format_double(s.bm25.k1) << " b=" << detail::format_double(s.bm25.b);
  } else {
    out << " vectors=" << (s.dense_provider ? "external" : "tfidf");
  }
  out << " rows=";
  for (std::size_t i = 0; i < s.rows.size(); ++i) out << (i ? "," : "") << row_key(s.rows[i]);
  out << " k=";
  for (std::size_t i = 0; i < s.k_set.size(); ++i) out << (i ? "," : "") << s.k_set[i];
  out << " budget=" << s.extraction.budget << " stop=" << s.extraction.stop_on_nonpositive_gain
      << " max_phrase=" << s.extraction.max_phrase_tokens << " noise=" << s.noise_count
      << " repeat=" << s.repeat << " seed=" << s.seed;
  if (s.slice.from || s.slice.to) {
    out << " slice=" << (s.slice.from ? s.slice.from->str() : "") << ".."
        << (s.slice.to ? s.slice.to->str() : "");
  } else {
    out << " slice=last:" << detail::format_double(s.slice.fraction);
  }
  return out.str();
}

/// Oracle concepts (DPP selection over each listed document's reasoning).
inline ConceptMap extract_concept_map(const Corpus& corpus, const std::vector<std::string>& ids,
                                      const Tagger& tagger, const ExtractionOptions& options) {
  const TfidfProvider provider(fit_tfidf(corpus, TextField::reasoning));
  ConceptMap out;
  for (const auto& id : ids) {
    const auto& doc = corpus.at(id);
    if (doc.reasoning.empty()) continue;
    out.emplace(id, select_key_concepts(doc, provider, tagger, options).concepts);
  }
  return out;
}

struct ExperimentResult {
  std::string fingerprint;
  std::vector<EvalReport> rows;
};

/// Runs every configured row over the evaluation slice: pool, augmented
/// query, full-pool ranking, metrics.
inline ExperimentResult run_experiment(const Corpus& corpus, const ExperimentSetup& setup) {
  if (setup.rows.empty()) throw ConfigError("experiment has no rows");
  if (setup.k_set.empty()) throw ConfigError("experiment has an empty k set");
  for (const auto k : setup.k_set) {
    if (k < 1) throw ConfigError("every k must be >= 1");
  }
  const auto needs = [&](ConceptSource s) {
    return std::find(setup.rows.begin(), setup.rows.end(), s) != setup.rows.end();
  };
  if ((needs(ConceptSource::imported_file) || needs(ConceptSource::imported_plus_noise)) &&
      setup.imported == nullptr) {
    throw ConfigError("imported concept rows require an imported concept file");
  }
  if (needs(ConceptSource::extracted_oracle) && setup.oracle == nullptr && setup.tagger == nullptr) {
    throw ConfigError("oracle row requires an oracle concept file or a tagger");
  }

  const auto queries = evaluation_queries(corpus, setup.slice);

  ConceptMap extracted;
  const ConceptMap* oracle = setup.oracle;
  if (needs(ConceptSource::extracted_oracle) && oracle == nullptr) {
    extracted = extract_concept_map(corpus, queries, *setup.tagger, setup.extraction);
    oracle = &extracted;
  }

  std::optional<Bm25Index> bm25;
  std::unique_ptr<TfidfProvider> tfidf;
  std::optional<DenseIndex> dense;
  const EmbeddingProvider* provider = setup.dense_provider;
  if (setup.retriever == RetrieverKind::bm25) {
    bm25 = build_index(corpus, IndexField::facts, setup.bm25);
  } else {
    if (provider == nullptr) {
      tfidf = std::make_unique<TfidfProvider>(fit_tfidf(corpus, TextField::facts));
      provider = tfidf.get();
    }
    dense.emplace(*provider, corpus);
  }

  ExperimentResult result;
  result.fingerprint = experiment_fingerprint(setup);
  const std::string base_name = setup.retriever == RetrieverKind::bm25 ? "BM25" : "Dense";

  for (const auto source : setup.rows) {
    std::vector<RankedRun> runs;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const auto& query = corpus.at(queries[qi]);
      const auto pool = candidate_pool(corpus, query.id);
      if (pool.empty()) {
        runs.push_back({query.id, {}});
        continue;
      }

      std::vector<std::string> concepts;
      auto lookup = [&](const ConceptMap* map) {
        if (const auto it = map->find(query.id); it != map->end()) {
          concepts.insert(concepts.end(), it->second.begin(), it->second.end());
        }
      };
      switch (source) {
        case ConceptSource::none:
          break;
        case ConceptSource::imported_file:
          lookup(setup.imported);
          break;
        case ConceptSource::imported_plus_noise: {
          lookup(setup.imported);
          const auto seed = detail::splitmix64(setup.seed ^ detail::splitmix64(corpus.position(query.id)));
          const auto noise = sample_noisy_concepts(*setup.imported, corpus, query.id, setup.noise_count, seed);
          concepts.insert(concepts.end(), noise.begin(), noise.end());
          break;
        }
        case ConceptSource::extracted_oracle:
          lookup(oracle);
          break;
      }
      const auto text = augment_query(query.facts, concepts, setup.repeat);

      if (bm25) {
        runs.push_back(search_bm25(*bm25, text, pool, pool.size(), query.id));
      } else {
        const std::string key =
            source == ConceptSource::none ? query.id : query.id + "#" + std::string(row_key(source));
        const auto qv = provider->embed_document(key, text);
        runs.push_back(search_dense(qv, *dense, corpus, pool, pool.size(), query.id));
      }
    }
    auto report = evaluate_run_set(runs, corpus, setup.k_set);
    switch (source) {
      case ConceptSource::none:
        report.name = base_name;
        break;
      case ConceptSource::imported_file:
        report.name = "+ Concepts";
        break;
      case ConceptSource::imported_plus_noise:
        report.name = "+ Concepts-Noise";
        break;
      case ConceptSource::extracted_oracle:
        report.name = "+ Oracle";
        break;
    }
    report.fingerprint = result.fingerprint;
    result.rows.push_back(std::move(report));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

/// Rows = configurations, columns = R@k... and MAP, values in percent.
inline nlohmann::ordered_json report_json(const ExperimentResult& result) {
  nlohmann::ordered_json out;
  out["config"] = result.fingerprint;
  nlohmann::ordered_json columns = nlohmann::ordered_json::array();
  if (!result.rows.empty()) {
    for (const auto k : result.rows.front().k_set) columns.push_back("R@" + std::to_string(k));
  }
  columns.push_back("MAP");
  out["columns"] = columns;
  out["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    nlohmann::ordered_json row;
    row["name"] = r.name;
    for (std::size_t i = 0; i < r.k_set.size(); ++i) row["R@" + std::to_string(r.k_set[i])] = 100.0 * r.mean_recall[i];
    row["MAP"] = 100.0 * r.map;
    row["queries"] = r.query_count();
    row["skipped"] = r.skipped.size();
    nlohmann::ordered_json per_query = nlohmann::ordered_json::array();
    for (const auto& m : r.per_query) {
      nlohmann::ordered_json q;
      q["id"] = m.query_id;
      q["relevant"] = m.num_relevant;
      for (std::size_t i = 0; i < r.k_set.size(); ++i) q["R@" + std::to_string(r.k_set[i])] = m.recall[i];
      q["AP"] = m.average_precision;
      per_query.push_back(std::move(q));
    }
    row["per_query"] = std::move(per_query);
    out["rows"].push_back(std::move(row));
  }
  return out;
}

inline void print_report_table(std::ostream& out, const ExperimentResult& result) {
  std::size_t name_width = 4;
  for (const auto& r : result.rows) name_width = std::max(name_width, r.name.size());
  char buf[64];
  auto cell = [&](std::string_view s) {
    std::snprintf(buf, sizeof buf, "%9.*s", static_cast<int>(s.size()), s.data());
    out << buf;
  };
  out << std::string(name_width, ' ');
  if (!result.rows.empty()) {
    for (const auto k : result.rows.front().k_set) cell("R" + std::to_string(k));
  }
  cell("MAP");
  cell("queries");
  out << '\n';
  for (const auto& r : result.rows) {
    out << r.name << std::string(name_width - r.name.size(), ' ');
    for (const auto v : r.mean_recall) {
      std::snprintf(buf, sizeof buf, "%9.2f", 100.0 * v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%9.2f%9zu", 100.0 * r.map, r.query_count());
    out << buf << '\n';
  }
}

}  // namespace pcr

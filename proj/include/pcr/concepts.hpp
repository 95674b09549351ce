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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pcr/corpus.hpp"
#include "pcr/dpp.hpp"
#include "pcr/embed.hpp"
#include "pcr/error.hpp"
#include "pcr/textproc.hpp"

namespace pcr {

/// One place a candidate phrase occurs: its paragraph and the token range
/// [begin, end) in the tokenized reasoning text.
struct Occurrence {
  std::size_t paragraph = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

struct CandidateConcept {
  std::string text;  // normalized phrase
  std::vector<Occurrence> occurrences;
  double raw_relevance = 0.0;
  std::optional<std::size_t> citation_distance;  // unset when the document cites nothing
  double regularizer = 0.0;
  double quality = 0.0;
};

struct ConceptSelection {
  std::string doc_id;
  std::vector<std::string> concepts;  // greedy pick order
  std::vector<double> quality;
  std::vector<double> gains;
};

struct ExtractionOptions {
  std::size_t budget = 15;
  // Off by default: q = r * rho never exceeds 1, so every singleton gain
  // 2 ln q is <= 0 and the flag would stop before the first pick.
  bool stop_on_nonpositive_gain = false;
  std::size_t max_phrase_tokens = 8;
};

/// Tagged reasoning text with its paragraph layout and citation markers.
struct ReasoningAnalysis {
  std::vector<Token> tokens;
  std::vector<Paragraph> paragraphs;
  std::vector<std::pair<std::size_t, std::size_t>> paragraph_tokens;  // [begin, end) per paragraph
  std::vector<CitationMarker> markers;
};

inline ReasoningAnalysis analyze_reasoning(std::string_view reasoning, const Tagger& tagger) {
  ReasoningAnalysis a;
  a.tokens = tagger.tag(tokenize(reasoning));
  a.paragraphs = split_paragraphs(reasoning);
  a.markers = locate_citation_markers(a.tokens);
  std::size_t t = 0;
  for (const auto& p : a.paragraphs) {
    while (t < a.tokens.size() && a.tokens[t].span.begin < p.span.begin) ++t;
    const std::size_t begin = t;
    while (t < a.tokens.size() && a.tokens[t].span.begin < p.span.end) ++t;
    a.paragraph_tokens.emplace_back(begin, t);
  }
  return a;
}

/// Noun-phrase chunks of every reasoning paragraph, deduplicated by
/// normalized text in first-occurrence order. Phrases longer than
/// `max_phrase_tokens` are dropped.
inline std::vector<CandidateConcept> extract_candidates(const ReasoningAnalysis& analysis,
                                                        std::size_t max_phrase_tokens = 8) {
  std::vector<CandidateConcept> out;
  std::unordered_map<std::string, std::size_t> by_text;
  for (std::size_t p = 0; p < analysis.paragraphs.size(); ++p) {
    const auto [begin, end] = analysis.paragraph_tokens[p];
    const std::vector<Token> slice(analysis.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                                   analysis.tokens.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& span : chunk_noun_phrases(slice)) {
      if (span.end - span.begin > max_phrase_tokens) continue;
      auto text = join_tokens(slice, span.begin, span.end);
      const Occurrence occ{p, begin + span.begin, begin + span.end};
      const auto [it, inserted] = by_text.emplace(text, out.size());
      if (inserted) {
        CandidateConcept c;
        c.text = std::move(text);
        c.occurrences.push_back(occ);
        out.push_back(std::move(c));
      } else {
        out[it->second].occurrences.push_back(occ);
      }
    }
  }
  return out;
}

inline std::vector<CandidateConcept> extract_candidates(const Document& doc, const Tagger& tagger,
                                                        std::size_t max_phrase_tokens = 8) {
  if (doc.reasoning.empty()) return {};
  return extract_candidates(analyze_reasoning(doc.reasoning, tagger), max_phrase_tokens);
}

/// 1 - cos(embed(paragraph without the concept), embed(paragraph)). Every
/// non-overlapping occurrence of the concept's token sequence is deleted.
inline double masked_relevance(const Paragraph& paragraph, std::string_view concept_text,
                               const EmbeddingProvider& provider) {
  const auto tokens = tokenize(paragraph.text);
  const auto phrase = tokenize(concept_text);
  if (phrase.empty()) throw InvalidArgument("masked_relevance: empty concept");

  std::vector<Token> kept;
  bool found = false;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool match = i + phrase.size() <= tokens.size();
    for (std::size_t j = 0; match && j < phrase.size(); ++j) {
      match = tokens[i + j].text == phrase[j].text;
    }
    if (match) {
      found = true;
      i += phrase.size();
    } else {
      kept.push_back(tokens[i]);
      ++i;
    }
  }
  if (!found) {
    throw NotFoundError("concept '" + std::string(concept_text) + "' does not occur in paragraph " +
                        std::to_string(paragraph.index));
  }
  const auto original = provider.embed_text(paragraph.text);
  const auto masked = provider.embed_text(join_tokens(kept));
  return 1.0 - cosine(masked, original);
}

inline double masked_relevance(const Paragraph& paragraph, const CandidateConcept& candidate,
                               const EmbeddingProvider& provider) {
  return masked_relevance(paragraph, candidate.text, provider);
}

/// Token distance from the candidate's nearest occurrence to the nearest
/// marker, floored at 1. nullopt when there are no markers.
inline std::optional<std::size_t> citation_distance(const CandidateConcept& candidate,
                                                    const std::vector<CitationMarker>& markers) {
  if (markers.empty()) return std::nullopt;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (const auto& occ : candidate.occurrences) {
    for (const auto& m : markers) {
      std::size_t d = 0;
      if (m.token_index < occ.begin) {
        d = occ.begin - m.token_index;
      } else if (m.token_index >= occ.end) {
        d = m.token_index - (occ.end - 1);
      }
      best = std::min(best, d);
    }
  }
  return std::max<std::size_t>(best, 1);
}

/// Softmax over exp(1/k) of a distance list.
inline std::vector<double> softmax_inverse_distance(const std::vector<std::size_t>& distances) {
  std::vector<double> x;
  x.reserve(distances.size());
  for (const auto k : distances) x.push_back(std::exp(1.0 / static_cast<double>(std::max<std::size_t>(k, 1))));
  const double hi = x.empty() ? 0.0 : *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (auto& v : x) {
    v = std::exp(v - hi);
    total += v;
  }
  for (auto& v : x) v /= total;
  return x;
}

/// rho_i = softmax_i(exp(1/k_i)) over all candidates of a document; uniform
/// when the document has no citation markers.
inline std::vector<double> position_regularizer(const std::vector<CandidateConcept>& candidates,
                                                const std::vector<CitationMarker>& markers) {
  if (candidates.empty()) throw InvalidArgument("position_regularizer: no candidates");
  if (markers.empty()) {
    return std::vector<double>(candidates.size(), 1.0 / static_cast<double>(candidates.size()));
  }
  std::vector<std::size_t> distances;
  distances.reserve(candidates.size());
  for (const auto& c : candidates) distances.push_back(*citation_distance(c, markers));
  return softmax_inverse_distance(distances);
}

/// Fills raw relevance (max over occurrence paragraphs), citation
/// distance, regularizer, and quality = max(r * rho, kQualityFloor).
inline std::vector<CandidateConcept> score_quality(std::vector<CandidateConcept> candidates,
                                                   const std::vector<Paragraph>& paragraphs,
                                                   const EmbeddingProvider& provider,
                                                   const std::vector<CitationMarker>& markers) {
  if (candidates.empty()) return candidates;
  const auto rho = position_regularizer(candidates, markers);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& c = candidates[i];
    double best = 0.0;
    std::size_t last_paragraph = std::numeric_limits<std::size_t>::max();
    for (const auto& occ : c.occurrences) {
      if (occ.paragraph == last_paragraph) continue;
      last_paragraph = occ.paragraph;
      best = std::max(best, masked_relevance(paragraphs.at(occ.paragraph), c.text, provider));
    }
    c.raw_relevance = best;
    c.citation_distance = citation_distance(c, markers);
    c.regularizer = rho[i];
    c.quality = std::max(c.raw_relevance * c.regularizer, kQualityFloor);
  }
  return candidates;
}

/// Cosine similarity matrix of concept embeddings with a unit diagonal.
inline Eigen::MatrixXd concept_similarity(const std::vector<CandidateConcept>& candidates,
                                          const EmbeddingProvider& provider) {
  const auto n = static_cast<Eigen::Index>(candidates.size());
  std::vector<EmbeddingVector> vecs;
  vecs.reserve(candidates.size());
  for (const auto& c : candidates) vecs.push_back(provider.embed_text(c.text));
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      s(i, j) = s(j, i) = cosine(vecs[static_cast<std::size_t>(i)], vecs[static_cast<std::size_t>(j)]);
    }
  }
  return s;
}

/// Candidate mining, quality scoring and greedy DPP selection for one
/// document.
inline ConceptSelection select_key_concepts(const Document& doc, const EmbeddingProvider& provider,
                                            const Tagger& tagger,
                                            const ExtractionOptions& options = {}) {
  if (options.budget < 1) throw InvalidArgument("select_key_concepts: budget must be >= 1");
  ConceptSelection sel{doc.id, {}, {}, {}};
  if (doc.reasoning.empty()) return sel;

  const auto analysis = analyze_reasoning(doc.reasoning, tagger);
  auto candidates = extract_candidates(analysis, options.max_phrase_tokens);
  if (candidates.empty()) return sel;
  candidates = score_quality(std::move(candidates), analysis.paragraphs, provider, analysis.markers);

  Eigen::VectorXd q(static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) q[static_cast<Eigen::Index>(i)] = candidates[i].quality;
  const auto kernel = build_kernel(q, concept_similarity(candidates, provider));
  const auto greedy = greedy_map(kernel, options.budget, options.stop_on_nonpositive_gain);

  for (std::size_t k = 0; k < greedy.selected.size(); ++k) {
    const auto& c = candidates[greedy.selected[k]];
    sel.concepts.push_back(c.text);
    sel.quality.push_back(c.quality);
    sel.gains.push_back(greedy.gains[k]);
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Concept files and noisy sampling

/// Document id -> concepts.
using ConceptMap = std::map<std::string, std::vector<std::string>>;

inline void write_concept_line(std::ostream& out, const std::string& id,
                               const std::vector<std::string>& concepts) {
  nlohmann::ordered_json rec;
  rec["id"] = id;
  rec["concepts"] = concepts;
  out << rec.dump() << '\n';
}

inline ConceptMap read_concept_file(std::istream& in) {
  ConceptMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "concept file line " + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("concepts") || !obj["concepts"].is_array()) {
      throw ParseError(where + ": expected {\"id\": string, \"concepts\": [string, ...]}");
    }
    std::vector<std::string> concepts;
    for (const auto& c : obj["concepts"]) {
      if (!c.is_string()) throw ParseError(where + ": concepts must be strings");
      concepts.push_back(c.get<std::string>());
    }
    auto id = obj["id"].get<std::string>();
    if (!out.emplace(id, std::move(concepts)).second) {
      throw ParseError(where + ": duplicate id '" + id + "'");
    }
  }
  return out;
}

inline ConceptMap load_concept_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open concept file '" + path + "'");
  return read_concept_file(in);
}

namespace detail {

// Uniform integer in [0, bound) from a 64-bit Mersenne Twister, by
// rejection; unlike std::uniform_int_distribution the sequence is the
// same on every standard library.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace detail

/// Draws `count` concepts uniformly without replacement (capped at the
/// pool size) from the concept sets of every document other than the
/// query, in corpus order before shuffling.
inline std::vector<std::string> sample_noisy_concepts(const ConceptMap& concepts, const Corpus& corpus,
                                                      std::string_view query_id, std::size_t count,
                                                      std::uint64_t seed) {
  corpus.at(query_id);
  if (count == 0) return {};
  std::vector<std::string> pool;
  for (const auto& doc : corpus) {
    if (doc.id == query_id) continue;
    const auto it = concepts.find(doc.id);
    if (it == concepts.end()) continue;
    pool.insert(pool.end(), it->second.begin(), it->second.end());
  }
  if (pool.empty()) {
    throw NotFoundError("no document other than '" + std::string(query_id) + "' has concepts");
  }
  std::mt19937_64 rng(seed);
  const std::size_t take = std::min(count, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(detail::bounded_draw(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

}  // namespace pcr

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
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pcr/concepts.hpp"
#include "pcr/corpus.hpp"
#include "pcr/embed.hpp"
#include "pcr/error.hpp"
#include "pcr/textproc.hpp"

namespace pcr {

inline constexpr std::string_view kConceptSeparator = "\n---\n";

/// Facts followed by a separator line and the concept block ("; "-joined),
/// the block repeated `repeat` times on consecutive lines.
inline std::string augment_query(std::string_view facts, const std::vector<std::string>& concepts,
                                 std::size_t repeat = 1) {
  std::string out(facts);
  if (concepts.empty() || repeat == 0) return out;
  std::string block;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (i > 0) block += "; ";
    block += concepts[i];
  }
  out += kConceptSeparator;
  for (std::size_t r = 0; r < repeat; ++r) {
    if (r > 0) out.push_back('\n');
    out += block;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranked runs

struct ScoredDoc {
  std::string id;
  double score = 0.0;
};

struct RankedRun {
  std::string query_id;
  std::vector<ScoredDoc> results;  // score desc, then (date, id) asc
};

namespace detail {

struct RankEntry {
  double score;
  Date date;
  const std::string* id;
};

inline RankedRun top_k(std::string query_id, std::vector<RankEntry> entries, std::size_t k) {
  auto better = [](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.date != b.date) return a.date < b.date;
    return *a.id < *b.id;
  };
  const auto keep = std::min(k, entries.size());
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(),
                    better);
  RankedRun run{std::move(query_id), {}};
  run.results.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) run.results.push_back({*entries[i].id, entries[i].score});
  return run;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// BM25

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

enum class IndexField : std::uint8_t { facts = 0, facts_concepts = 1 };

struct Posting {
  std::uint32_t doc = 0;  // ordinal into the doc table
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

struct IndexedDoc {
  std::string id;
  Date date;
  std::uint64_t length = 0;

  friend bool operator==(const IndexedDoc&, const IndexedDoc&) = default;
};

class Bm25Index {
 public:
  Bm25Index() = default;
  Bm25Index(Bm25Params params, IndexField field, std::vector<IndexedDoc> docs,
            std::map<std::string, std::vector<Posting>> postings)
      : params_(params), field_(field), docs_(std::move(docs)), postings_(std::move(postings)) {
    if (!(params_.k1 >= 0.0) || !(params_.b >= 0.0 && params_.b <= 1.0)) {
      throw InvalidArgument("BM25 parameters require k1 >= 0 and 0 <= b <= 1");
    }
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      if (!ordinal_.emplace(docs_[i].id, static_cast<std::uint32_t>(i)).second) {
        throw InvalidArgument("duplicate indexed document '" + docs_[i].id + "'");
      }
      total += docs_[i].length;
    }
    avgdl_ = docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs_.size());
  }

  const Bm25Params& params() const { return params_; }
  IndexField field() const { return field_; }
  const std::vector<IndexedDoc>& docs() const { return docs_; }
  const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }
  std::size_t num_docs() const { return docs_.size(); }
  double avgdl() const { return avgdl_; }

  std::uint32_t ordinal(std::string_view id) const {
    const auto it = ordinal_.find(std::string(id));
    if (it == ordinal_.end()) throw NotFoundError("document '" + std::string(id) + "' is not indexed");
    return it->second;
  }

  const std::vector<Posting>* find(const std::string& term) const {
    const auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
  }

  /// ln(1 + (N - df + 0.5) / (df + 0.5)); strictly positive.
  double idf(std::size_t df) const {
    const auto n = static_cast<double>(docs_.size());
    const auto d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
  }

  /// Contribution of one term occurring tf times in a document of length dl.
  double term_score(double idf, std::uint32_t tf, std::uint64_t dl) const {
    const double norm = avgdl_ > 0.0 ? static_cast<double>(dl) / avgdl_ : 0.0;
    const double t = static_cast<double>(tf);
    return idf * (t * (params_.k1 + 1.0)) / (t + params_.k1 * (1.0 - params_.b + params_.b * norm));
  }

  friend bool operator==(const Bm25Index& a, const Bm25Index& b) {
    return a.params_ == b.params_ && a.field_ == b.field_ && a.docs_ == b.docs_ &&
           a.postings_ == b.postings_;
  }

 private:
  Bm25Params params_;
  IndexField field_ = IndexField::facts;
  std::vector<IndexedDoc> docs_;
  std::map<std::string, std::vector<Posting>> postings_;  // postings sorted by doc ordinal
  std::unordered_map<std::string, std::uint32_t> ordinal_;
  double avgdl_ = 0.0;
};

/// Indexes every document's facts, or facts augmented with its concepts
/// (documents absent from `concepts` are indexed by facts alone).
inline Bm25Index build_index(const Corpus& corpus, IndexField field = IndexField::facts,
                             Bm25Params params = {}, const ConceptMap* concepts = nullptr) {
  if (corpus.empty()) throw InvalidArgument("build_index: empty corpus");
  if (field == IndexField::facts_concepts && concepts == nullptr) {
    throw InvalidArgument("build_index: facts+concepts field requires a concept map");
  }
  std::vector<IndexedDoc> docs;
  std::map<std::string, std::vector<Posting>> postings;
  for (const auto& doc : corpus) {
    std::string text = doc.facts;
    if (field == IndexField::facts_concepts) {
      if (const auto it = concepts->find(doc.id); it != concepts->end()) {
        text = augment_query(doc.facts, it->second);
      }
    }
    const auto tokens = tokenize(text);
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t.text];
    const auto ordinal = static_cast<std::uint32_t>(docs.size());
    for (const auto& [term, count] : tf) postings[term].push_back({ordinal, count});
    docs.push_back({doc.id, doc.date, tokens.size()});
  }
  return Bm25Index(params, field, std::move(docs), std::move(postings));
}

namespace detail {

/// Distinct query terms with multiplicity, in lexicographic order.
inline std::map<std::string, std::uint32_t> query_terms(const std::vector<std::string>& tokens) {
  std::map<std::string, std::uint32_t> out;
  for (const auto& t : tokens) ++out[t];
  return out;
}

inline std::vector<std::string> token_texts(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace detail

/// Sum over distinct query terms of multiplicity * idf * saturated tf.
inline double bm25_score(const Bm25Index& index, const std::vector<std::string>& query_tokens,
                         std::string_view doc_id) {
  const auto ord = index.ordinal(doc_id);
  const auto& doc = index.docs()[ord];
  double score = 0.0;
  for (const auto& [term, mult] : detail::query_terms(query_tokens)) {
    const auto* list = index.find(term);
    if (list == nullptr) continue;
    const auto it = std::lower_bound(list->begin(), list->end(), ord,
                                     [](const Posting& p, std::uint32_t o) { return p.doc < o; });
    if (it == list->end() || it->doc != ord) continue;
    score += static_cast<double>(mult) * index.term_score(index.idf(list->size()), it->tf, doc.length);
  }
  return score;
}

/// Scores every pool document and keeps the best k.
inline RankedRun search_bm25(const Bm25Index& index, std::string_view query_text,
                             const std::vector<std::string>& pool, std::size_t k,
                             std::string query_id = {}) {
  if (k < 1) throw InvalidArgument("search_bm25: k must be >= 1");
  std::vector<double> scores(index.num_docs(), 0.0);
  std::vector<bool> in_pool(index.num_docs(), false);
  std::vector<std::uint32_t> members;
  for (const auto& id : pool) {
    const auto ord = index.ordinal(id);
    if (!in_pool[ord]) {
      in_pool[ord] = true;
      members.push_back(ord);
    }
  }
  for (const auto& [term, mult] : detail::query_terms(detail::token_texts(query_text))) {
    const auto* list = index.find(term);
    if (list == nullptr) continue;
    const double idf = index.idf(list->size());
    for (const auto& p : *list) {
      if (!in_pool[p.doc]) continue;
      scores[p.doc] += static_cast<double>(mult) * index.term_score(idf, p.tf, index.docs()[p.doc].length);
    }
  }
  std::vector<detail::RankEntry> entries;
  entries.reserve(members.size());
  for (const auto ord : members) {
    const auto& d = index.docs()[ord];
    entries.push_back({scores[ord], d.date, &d.id});
  }
  return detail::top_k(std::move(query_id), std::move(entries), k);
}

// ---------------------------------------------------------------------------
// Dense retrieval

/// Document vectors computed once per corpus for repeated dense searches.
class DenseIndex {
 public:
  DenseIndex(const EmbeddingProvider& provider, const Corpus& corpus) {
    for (const auto& doc : corpus) vectors_.emplace(doc.id, provider.embed_document(doc.id, doc.facts));
  }

  const EmbeddingVector& at(const std::string& id) const {
    const auto it = vectors_.find(id);
    if (it == vectors_.end()) throw NotFoundError("no dense vector for document '" + id + "'");
    return it->second;
  }

 private:
  std::unordered_map<std::string, EmbeddingVector> vectors_;
};

namespace detail {

template <typename VectorFor>
RankedRun dense_top_k(const EmbeddingVector& query, const Corpus& corpus,
                      const std::vector<std::string>& pool, std::size_t k, std::string query_id,
                      VectorFor&& vector_for) {
  if (k < 1) throw InvalidArgument("search_dense: k must be >= 1");
  std::vector<RankEntry> entries;
  std::unordered_set<std::string_view> seen;
  for (const auto& id : pool) {
    const auto& doc = corpus.at(id);
    if (!seen.insert(doc.id).second) continue;
    const EmbeddingVector& v = vector_for(doc);
    if (v.size() != query.size()) {
      throw InvalidArgument("dense vector for '" + doc.id + "' has dimension " + std::to_string(v.size()) +
                            ", query has " + std::to_string(query.size()));
    }
    entries.push_back({query.dot(v), doc.date, &doc.id});
  }
  return top_k(std::move(query_id), std::move(entries), k);
}

}  // namespace detail

/// Exact top-k by dot product. The query is embedded via
/// embed_document(query_key, query_text), so keyed providers look up
/// `query_key` and text providers embed `query_text`.
inline RankedRun search_dense(const EmbeddingProvider& provider, std::string_view query_key,
                              std::string_view query_text, const Corpus& corpus,
                              const std::vector<std::string>& pool, std::size_t k) {
  const auto query = provider.embed_document(query_key, query_text);
  EmbeddingVector scratch;
  return detail::dense_top_k(query, corpus, pool, k, std::string(query_key),
                             [&](const Document& doc) -> const EmbeddingVector& {
                               scratch = provider.embed_document(doc.id, doc.facts);
                               return scratch;
                             });
}

inline RankedRun search_dense(const EmbeddingVector& query, const DenseIndex& index,
                              const Corpus& corpus, const std::vector<std::string>& pool,
                              std::size_t k, std::string query_id = {}) {
  return detail::dense_top_k(query, corpus, pool, k, std::move(query_id),
                             [&](const Document& doc) -> const EmbeddingVector& { return index.at(doc.id); });
}

// ---------------------------------------------------------------------------
// Index persistence
//
// "PCRIDX1" | u32 version | params section | doc section | postings section
// Each section is a u64 byte length followed by its payload. All integers
// and doubles are little-endian; strings are u32 length + bytes.

inline constexpr std::string_view kIndexMagic = "PCRIDX1";
inline constexpr std::uint32_t kIndexVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }
  void section(const ByteWriter& inner) {
    u64(inner.buf_.size());
    buf_.append(inner.buf_);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) {
      throw corrupt("unexpected end of data (need " + std::to_string(n) + " bytes)");
    }
    const auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() { return std::string(take(u32())); }

  /// Reader over the next length-prefixed section; offsets stay absolute.
  ByteReader section() {
    const auto len = u64();
    const auto start = pos_;
    take(static_cast<std::size_t>(std::min<std::uint64_t>(len, data_.size())));
    ByteReader inner(data_.substr(0, start + static_cast<std::size_t>(len)));
    inner.pos_ = start;
    return inner;
  }

  ParseError corrupt(const std::string& what) const {
    return ParseError("corrupt index file at offset " + std::to_string(pos_) + ": " + what);
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_index(const Bm25Index& index) {
  detail::ByteWriter out;
  out.raw(kIndexMagic);
  out.u32(kIndexVersion);

  detail::ByteWriter params;
  params.f64(index.params().k1);
  params.f64(index.params().b);
  params.u8(static_cast<std::uint8_t>(index.field()));
  out.section(params);

  detail::ByteWriter docs;
  docs.u64(index.docs().size());
  for (const auto& d : index.docs()) {
    docs.str(d.id);
    docs.i32(static_cast<int>(d.date.ymd().year()));
    docs.u8(static_cast<std::uint8_t>(static_cast<unsigned>(d.date.ymd().month())));
    docs.u8(static_cast<std::uint8_t>(static_cast<unsigned>(d.date.ymd().day())));
    docs.u64(d.length);
  }
  out.section(docs);

  detail::ByteWriter postings;
  postings.u64(index.postings().size());
  for (const auto& [term, list] : index.postings()) {
    postings.str(term);
    postings.u64(list.size());
    for (const auto& p : list) {
      postings.u32(p.doc);
      postings.u32(p.tf);
    }
  }
  out.section(postings);
  return out.bytes();
}

inline Bm25Index deserialize_index(std::string_view bytes) {
  detail::ByteReader in(bytes);
  if (bytes.size() < kIndexMagic.size() || bytes.substr(0, kIndexMagic.size()) != kIndexMagic) {
    throw in.corrupt("missing PCRIDX1 magic");
  }
  in.take(kIndexMagic.size());
  const auto version = in.u32();
  if (version != kIndexVersion) {
    throw ParseError("unsupported index version " + std::to_string(version) + " (expected " +
                     std::to_string(kIndexVersion) + ")");
  }

  auto params_in = in.section();
  Bm25Params params{params_in.f64(), params_in.f64()};
  const auto field_raw = params_in.u8();
  if (field_raw > 1) throw params_in.corrupt("unknown index field " + std::to_string(field_raw));
  if (!params_in.at_end()) throw params_in.corrupt("trailing bytes in parameter section");

  auto docs_in = in.section();
  const auto ndocs = docs_in.u64();
  std::vector<IndexedDoc> docs;
  for (std::uint64_t i = 0; i < ndocs; ++i) {
    auto id = docs_in.str();
    const auto y = docs_in.i32();
    const auto m = docs_in.u8();
    const auto d = docs_in.u8();
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw docs_in.corrupt("invalid date for document '" + id + "'");
    docs.push_back({std::move(id), Date(ymd), docs_in.u64()});
  }
  if (!docs_in.at_end()) throw docs_in.corrupt("trailing bytes in document section");

  auto post_in = in.section();
  const auto nterms = post_in.u64();
  std::map<std::string, std::vector<Posting>> postings;
  for (std::uint64_t t = 0; t < nterms; ++t) {
    auto term = post_in.str();
    const auto count = post_in.u64();
    std::vector<Posting> list;
    for (std::uint64_t i = 0; i < count; ++i) {
      const Posting p{post_in.u32(), post_in.u32()};
      if (p.doc >= docs.size() || p.tf == 0 || (!list.empty() && list.back().doc >= p.doc)) {
        throw post_in.corrupt("invalid posting for term '" + term + "'");
      }
      list.push_back(p);
    }
    postings.emplace(std::move(term), std::move(list));
  }
  if (!post_in.at_end()) throw post_in.corrupt("trailing bytes in postings section");
  if (!in.at_end()) throw in.corrupt("trailing bytes after postings");

  try {
    return Bm25Index(params, static_cast<IndexField>(field_raw), std::move(docs), std::move(postings));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("corrupt index file: ") + e.what());
  }
}

inline void save_index(const Bm25Index& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write index file '" + path + "'");
  const auto bytes = serialize_index(index);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing index file '" + path + "'");
}

inline Bm25Index load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open index file '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_index(bytes);
}

}  // namespace pcr

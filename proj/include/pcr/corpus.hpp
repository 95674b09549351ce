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
#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcr/error.hpp"
#include "pcr/textproc.hpp"

namespace pcr {

/// Calendar date without time of day.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}

  /// Strict "YYYY-MM-DD"; returns nullopt for anything else, including
  /// impossible days such as 2001-02-29.
  static std::optional<Date> parse(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int fields[3] = {0, 0, 0};
    const std::pair<std::size_t, std::size_t> ranges[3] = {{0, 4}, {5, 7}, {8, 10}};
    for (int f = 0; f < 3; ++f) {
      for (std::size_t i = ranges[f].first; i < ranges[f].second; ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        fields[f] = fields[f] * 10 + (s[i] - '0');
      }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{fields[0]},
                                          std::chrono::month{static_cast<unsigned>(fields[1])},
                                          std::chrono::day{static_cast<unsigned>(fields[2])}};
    if (!ymd.ok()) return std::nullopt;
    return Date(ymd);
  }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd_.year()),
                  static_cast<unsigned>(ymd_.month()), static_cast<unsigned>(ymd_.day()));
    return buf;
  }

  std::chrono::year_month_day ymd() const { return ymd_; }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::month{1},
                                   std::chrono::day{1}};
};

struct Document {
  std::string id;
  Date date;
  std::string facts;
  std::string reasoning;
  std::vector<CitationMarker> citations;  // parsed from reasoning

  /// Validates the record and parses its citation markers.
  static Document make(std::string id, Date date, std::string facts, std::string reasoning) {
    if (!is_valid_document_id(id)) {
      throw ParseError("invalid document id '" + id + "'");
    }
    if (facts.empty()) throw ParseError("document '" + id + "' has empty facts");
    Document doc{std::move(id), date, std::move(facts), std::move(reasoning), {}};
    doc.citations = locate_citation_markers(tokenize(doc.reasoning));
    return doc;
  }
};

/// Documents iterated in (date, id) order; immutable once built.
class Corpus {
 public:
  Corpus() = default;

  static Corpus from_documents(std::vector<Document> docs) {
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) {
      return std::tie(a.date, a.id) < std::tie(b.date, b.id);
    });
    Corpus c;
    c.docs_ = std::move(docs);
    c.by_id_.reserve(c.docs_.size());
    for (std::size_t i = 0; i < c.docs_.size(); ++i) {
      if (!c.by_id_.emplace(c.docs_[i].id, i).second) {
        throw ParseError("duplicate document id '" + c.docs_[i].id + "'");
      }
    }
    return c;
  }

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  auto begin() const { return docs_.begin(); }
  auto end() const { return docs_.end(); }
  const Document& operator[](std::size_t i) const { return docs_[i]; }
  const std::vector<Document>& documents() const { return docs_; }

  bool contains(std::string_view id) const { return by_id_.contains(std::string(id)); }

  const Document* find(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &docs_[it->second];
  }

  const Document& at(std::string_view id) const {
    if (const auto* d = find(id)) return *d;
    throw NotFoundError("unknown document id '" + std::string(id) + "'");
  }

  /// Position in iteration order.
  std::size_t position(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) throw NotFoundError("unknown document id '" + std::string(id) + "'");
    return it->second;
  }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

inline constexpr std::string_view kCorpusFormat = "pcr-corpus";
inline constexpr int kCorpusVersion = 1;

namespace detail {

inline ParseError line_error(std::size_t lineno, const std::string& reason) {
  return ParseError("corpus line " + std::to_string(lineno) + ": " + reason);
}

inline std::string required_string(const nlohmann::json& obj, const char* key,
                                   std::size_t lineno) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw line_error(lineno, std::string("missing key '") + key + "'");
  if (!it->is_string()) throw line_error(lineno, std::string("key '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

/// Reads newline-delimited JSON: a format header line, then one document
/// per line. Empty lines are ignored.
inline Corpus read_corpus(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw detail::line_error(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw detail::line_error(lineno, "record is not a JSON object");

    if (!header_seen) {
      const auto fmt = obj.find("format");
      const auto ver = obj.find("version");
      if (fmt == obj.end() || ver == obj.end() || !fmt->is_string() || *fmt != kCorpusFormat) {
        throw detail::line_error(lineno, "expected header {\"format\":\"pcr-corpus\",\"version\":1}");
      }
      if (!ver->is_number_integer() || ver->get<int>() != kCorpusVersion) {
        throw detail::line_error(lineno, "unsupported corpus version " + ver->dump());
      }
      header_seen = true;
      continue;
    }

    for (const auto& [key, _] : obj.items()) {
      if (key != "id" && key != "date" && key != "facts" && key != "reasoning") {
        throw detail::line_error(lineno, "unknown key '" + key + "'");
      }
    }
    auto id = detail::required_string(obj, "id", lineno);
    const auto date_text = detail::required_string(obj, "date", lineno);
    auto facts = detail::required_string(obj, "facts", lineno);
    auto reasoning = detail::required_string(obj, "reasoning", lineno);
    const auto date = Date::parse(date_text);
    if (!date) throw detail::line_error(lineno, "invalid date '" + date_text + "'");
    if (!seen.insert(id).second) {
      throw detail::line_error(lineno, "duplicate document id '" + id + "'");
    }
    try {
      docs.push_back(Document::make(std::move(id), *date, std::move(facts), std::move(reasoning)));
    } catch (const ParseError& e) {
      throw detail::line_error(lineno, e.what());
    }
  }
  if (!header_seen) throw ParseError("corpus is empty: missing format header");
  return Corpus::from_documents(std::move(docs));
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus file '" + path + "'");
  return read_corpus(in);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  nlohmann::ordered_json header;
  header["format"] = kCorpusFormat;
  header["version"] = kCorpusVersion;
  out << header.dump() << '\n';
  for (const auto& d : corpus) {
    nlohmann::ordered_json rec;
    rec["id"] = d.id;
    rec["date"] = d.date.str();
    rec["facts"] = d.facts;
    rec["reasoning"] = d.reasoning;
    out << rec.dump() << '\n';
  }
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write corpus file '" + path + "'");
  write_corpus(out, corpus);
}

/// Ids of documents decided strictly before the query, in (date, id) order.
inline std::vector<std::string> candidate_pool(const Corpus& corpus, std::string_view query_id) {
  const auto& query = corpus.at(query_id);
  std::vector<std::string> pool;
  for (const auto& d : corpus) {
    if (!(d.date < query.date)) break;
    pool.push_back(d.id);
  }
  return pool;
}

/// Distinct cited ids that are also in the query's candidate pool.
inline std::vector<std::string> relevance_labels(const Corpus& corpus, std::string_view query_id) {
  const auto& query = corpus.at(query_id);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& m : query.citations) {
    const auto* target = corpus.find(m.target_id);
    if (target == nullptr || !(target->date < query.date)) continue;
    if (seen.insert(m.target_id).second) out.push_back(m.target_id);
  }
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    return corpus.position(a) < corpus.position(b);
  });
  return out;
}

}  // namespace pcr

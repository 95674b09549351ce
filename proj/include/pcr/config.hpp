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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pcr/concepts.hpp"
#include "pcr/corpus.hpp"
#include "pcr/error.hpp"
#include "pcr/eval.hpp"
#include "pcr/retrieve.hpp"

namespace pcr {

/// Experiment manifest. Loaded from an INI file:
///
///   seed = 0
///   [corpus]     path
///   [retriever]  kind = bm25|dense, k1, b, vectors
///   [concepts]   lexicon, budget, stop_on_nonpositive_gain,
///                max_phrase_tokens, imported, oracle, noise_count, repeat
///   [eval]       k = 50,100,500,1000, rows = baseline,oracle, from, to, fraction
///   [output]     dir
///
/// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::string corpus_path;
  RetrieverKind retriever = RetrieverKind::bm25;
  Bm25Params bm25;
  std::string vectors_path;
  std::string lexicon_path;
  ExtractionOptions extraction;
  std::string imported_path;
  std::string oracle_path;
  std::size_t noise_count = 5;
  std::size_t repeat = 1;
  std::vector<std::size_t> k_set = {50, 100, 500, 1000};
  std::vector<ConceptSource> rows;  // empty: derived from available sources
  EvalSlice slice;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  /// Rows to run: the configured list, or baseline + oracle (+ imported
  /// rows when an imported concept file is set).
  std::vector<ConceptSource> effective_rows() const {
    if (!rows.empty()) return rows;
    std::vector<ConceptSource> out{ConceptSource::none};
    if (!imported_path.empty()) {
      out.push_back(ConceptSource::imported_file);
      out.push_back(ConceptSource::imported_plus_noise);
    }
    out.push_back(ConceptSource::extracted_oracle);
    return out;
  }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !(in >> std::ws).eof()) {
    throw ConfigError("config key '" + key + "': invalid value '" + text + "'");
  }
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto t = detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace detail

inline std::vector<std::size_t> parse_k_set(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : detail::split_list(text)) {
    const auto k = detail::parse_number<long long>("eval.k", item);
    if (k < 1) throw ConfigError("eval.k: every k must be >= 1");
    out.push_back(static_cast<std::size_t>(k));
  }
  if (out.empty()) throw ConfigError("eval.k: empty list");
  return out;
}

inline std::vector<ConceptSource> parse_rows(const std::vector<std::string>& keys) {
  std::vector<ConceptSource> out;
  for (const auto& key : keys) {
    const auto src = parse_row_key(key);
    if (!src) {
      throw ConfigError("unknown row '" + key + "' (expected baseline, imported, noise or oracle)");
    }
    out.push_back(*src);
  }
  return out;
}

inline RetrieverKind parse_retriever(const std::string& text) {
  if (text == "bm25") return RetrieverKind::bm25;
  if (text == "dense") return RetrieverKind::dense;
  throw ConfigError("retriever.kind: expected bm25 or dense, got '" + text + "'");
}

inline Date parse_config_date(const std::string& key, const std::string& text) {
  const auto d = Date::parse(text);
  if (!d) throw ConfigError("config key '" + key + "': expected YYYY-MM-DD, got '" + text + "'");
  return *d;
}

inline RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? p : (base_dir / path).lexically_normal().string();
  };
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (const auto v = tree.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'))) {
      return std::string(detail::trim(*v));
    }
    return std::nullopt;
  };

  static const char* const known[] = {
      "seed", "corpus.path", "retriever.kind", "retriever.k1", "retriever.b", "retriever.vectors",
      "concepts.lexicon", "concepts.budget", "concepts.stop_on_nonpositive_gain",
      "concepts.max_phrase_tokens", "concepts.imported", "concepts.oracle", "concepts.noise_count",
      "concepts.repeat", "eval.k", "eval.rows", "eval.from", "eval.to", "eval.fraction", "output.dir"};
  for (const auto& [section, node] : tree) {
    const auto keys_of = [&](const std::string& prefix, const boost::property_tree::ptree& t) {
      std::vector<std::string> keys;
      if (t.empty()) {
        keys.push_back(prefix);
      } else {
        for (const auto& [k, _] : t) keys.push_back(prefix + "." + k);
      }
      return keys;
    };
    for (const auto& key : keys_of(section, node)) {
      bool ok = false;
      for (const auto* k : known) ok = ok || key == k;
      if (!ok) throw ConfigError("unknown config key '" + key + "'");
    }
  }

  RunConfig c;
  if (auto v = get("seed")) c.seed = detail::parse_number<std::uint64_t>("seed", *v);
  if (auto v = get("corpus.path")) c.corpus_path = resolve(*v);
  if (auto v = get("retriever.kind")) c.retriever = parse_retriever(*v);
  if (auto v = get("retriever.k1")) c.bm25.k1 = detail::parse_number<double>("retriever.k1", *v);
  if (auto v = get("retriever.b")) c.bm25.b = detail::parse_number<double>("retriever.b", *v);
  if (auto v = get("retriever.vectors")) c.vectors_path = resolve(*v);
  if (auto v = get("concepts.lexicon")) c.lexicon_path = resolve(*v);
  if (auto v = get("concepts.budget")) {
    c.extraction.budget = detail::parse_number<std::size_t>("concepts.budget", *v);
  }
  if (auto v = get("concepts.stop_on_nonpositive_gain")) {
    c.extraction.stop_on_nonpositive_gain = detail::parse_bool("concepts.stop_on_nonpositive_gain", *v);
  }
  if (auto v = get("concepts.max_phrase_tokens")) {
    c.extraction.max_phrase_tokens = detail::parse_number<std::size_t>("concepts.max_phrase_tokens", *v);
  }
  if (auto v = get("concepts.imported")) c.imported_path = resolve(*v);
  if (auto v = get("concepts.oracle")) c.oracle_path = resolve(*v);
  if (auto v = get("concepts.noise_count")) {
    c.noise_count = detail::parse_number<std::size_t>("concepts.noise_count", *v);
  }
  if (auto v = get("concepts.repeat")) c.repeat = detail::parse_number<std::size_t>("concepts.repeat", *v);
  if (auto v = get("eval.k")) c.k_set = parse_k_set(*v);
  if (auto v = get("eval.rows")) c.rows = parse_rows(detail::split_list(*v));
  if (auto v = get("eval.from")) c.slice.from = parse_config_date("eval.from", *v);
  if (auto v = get("eval.to")) c.slice.to = parse_config_date("eval.to", *v);
  if (auto v = get("eval.fraction")) c.slice.fraction = detail::parse_number<double>("eval.fraction", *v);
  if (auto v = get("output.dir")) c.output_dir = resolve(*v);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::filesystem::path(path).parent_path());
}

/// Checks value ranges and that every referenced input file exists.
inline void validate_config(const RunConfig& c, bool require_corpus = true) {
  auto require_file = [](const std::string& what, const std::string& path) {
    if (!path.empty() && !std::filesystem::is_regular_file(path)) {
      throw ConfigError(what + " '" + path + "' does not exist");
    }
  };
  if (require_corpus && c.corpus_path.empty()) throw ConfigError("no corpus path configured");
  require_file("corpus file", c.corpus_path);
  require_file("lexicon file", c.lexicon_path);
  require_file("vector file", c.vectors_path);
  require_file("imported concept file", c.imported_path);
  require_file("oracle concept file", c.oracle_path);
  if (!(c.bm25.k1 >= 0.0)) throw ConfigError("retriever.k1 must be >= 0");
  if (!(c.bm25.b >= 0.0 && c.bm25.b <= 1.0)) throw ConfigError("retriever.b must be in [0, 1]");
  if (c.extraction.budget < 1) throw ConfigError("concepts.budget must be >= 1");
  if (c.extraction.max_phrase_tokens < 1) throw ConfigError("concepts.max_phrase_tokens must be >= 1");
  if (c.retriever == RetrieverKind::bm25 && !c.vectors_path.empty()) {
    throw ConfigError("retriever.vectors is set but retriever.kind is bm25");
  }
  for (const auto row : c.effective_rows()) {
    if ((row == ConceptSource::imported_file || row == ConceptSource::imported_plus_noise) &&
        c.imported_path.empty()) {
      throw ConfigError("row '" + std::string(row_key(row)) + "' requires concepts.imported");
    }
  }
  if (!c.slice.from && !c.slice.to && !(c.slice.fraction > 0.0 && c.slice.fraction <= 1.0)) {
    throw ConfigError("eval.fraction must be in (0, 1]");
  }
}

}  // namespace pcr

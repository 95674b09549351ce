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
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcr/concepts.hpp"
#include "pcr/config.hpp"
#include "pcr/corpus.hpp"
#include "pcr/embed.hpp"
#include "pcr/error.hpp"
#include "pcr/eval.hpp"
#include "pcr/retrieve.hpp"
#include "pcr/textproc.hpp"

#ifndef PCR_DEFAULT_LEXICON
#define PCR_DEFAULT_LEXICON ""
#endif

namespace pcr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

inline constexpr const char* kConceptFileName = "concepts.jsonl";
inline constexpr const char* kIndexFileName = "index.pcridx";
inline constexpr const char* kReportJsonName = "report.json";
inline constexpr const char* kReportTextName = "report.txt";

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string corpus_path;

  // index
  std::string field = "facts";
  std::string concepts_path;

  // search
  std::string index_path;
  std::string query_id;
  std::string query_text;
  std::size_t k = 10;
  std::string retriever;

  // evaluate
  std::vector<std::string> rows;
};

inline RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  if (!o.corpus_path.empty()) c.corpus_path = o.corpus_path;
  if (!o.retriever.empty()) c.retriever = parse_retriever(o.retriever);
  if (!o.rows.empty()) c.rows = parse_rows(o.rows);
  if (c.lexicon_path.empty()) c.lexicon_path = PCR_DEFAULT_LEXICON;
  return c;
}

inline std::filesystem::path output_path(const RunConfig& c, const char* name) {
  std::filesystem::create_directories(c.output_dir);
  return std::filesystem::path(c.output_dir) / name;
}

inline LexiconTagger load_tagger(const RunConfig& c) {
  if (c.lexicon_path.empty()) throw ConfigError("no lexicon configured (concepts.lexicon)");
  return LexiconTagger(Lexicon::load(c.lexicon_path));
}

inline int cmd_extract(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto corpus = load_corpus(c.corpus_path);
  const auto tagger = load_tagger(c);
  const TfidfProvider provider(fit_tfidf(corpus, TextField::reasoning));
  const auto path = output_path(c, kConceptFileName);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw ConfigError("cannot write '" + path.string() + "'");
  for (const auto& doc : corpus) {
    if (doc.reasoning.empty()) {
      err << "warning: document '" << doc.id << "' has no reasoning; skipped\n";
      continue;
    }
    const auto sel = select_key_concepts(doc, provider, tagger, c.extraction);
    write_concept_line(file, doc.id, sel.concepts);
    out << doc.id << '\t' << sel.concepts.size() << '\n';
  }
  err << "wrote " << path.string() << '\n';
  return kExitOk;
}

inline int cmd_index(const RunConfig& c, const Options& o, std::ostream& out) {
  const auto corpus = load_corpus(c.corpus_path);
  IndexField field = IndexField::facts;
  std::optional<ConceptMap> concepts;
  if (o.field == "facts+concepts") {
    field = IndexField::facts_concepts;
    const auto& path = o.concepts_path.empty() ? c.imported_path : o.concepts_path;
    if (path.empty()) throw ConfigError("--field facts+concepts requires --concepts <file>");
    concepts = load_concept_file(path);
  } else if (o.field != "facts") {
    throw ConfigError("--field must be 'facts' or 'facts+concepts'");
  }
  const auto index = build_index(corpus, field, c.bm25, concepts ? &*concepts : nullptr);
  const auto path = output_path(c, kIndexFileName);
  save_index(index, path.string());
  out << "indexed " << index.num_docs() << " documents, " << index.postings().size() << " terms -> "
      << path.string() << '\n';
  return kExitOk;
}

inline void print_run(std::ostream& out, const RankedRun& run) {
  char buf[64];
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    std::snprintf(buf, sizeof buf, "\t%.6f", run.results[i].score);
    out << (i + 1) << '\t' << run.results[i].id << buf << '\n';
  }
}

inline int cmd_search(const RunConfig& c, const Options& o, std::ostream& out) {
  if (o.query_id.empty() == o.query_text.empty()) {
    throw ConfigError("search needs exactly one of --query-id or --text");
  }
  if (o.k < 1) throw ConfigError("-k must be >= 1");

  std::optional<Corpus> corpus;
  if (!c.corpus_path.empty()) corpus = load_corpus(c.corpus_path);
  if (!o.query_id.empty() && !corpus) throw ConfigError("--query-id requires a corpus");

  std::string text = o.query_text;
  std::vector<std::string> pool;
  if (!o.query_id.empty()) {
    text = corpus->at(o.query_id).facts;
    pool = candidate_pool(*corpus, o.query_id);
  }

  if (c.retriever == RetrieverKind::dense) {
    if (!corpus) throw ConfigError("dense search requires a corpus");
    if (o.query_id.empty()) {
      for (const auto& d : *corpus) pool.push_back(d.id);
    }
    std::unique_ptr<EmbeddingProvider> provider;
    if (c.vectors_path.empty()) {
      provider = std::make_unique<TfidfProvider>(fit_tfidf(*corpus, TextField::facts));
    } else {
      provider = std::make_unique<ExternalVectors>(load_external_vectors(c.vectors_path));
    }
    print_run(out, search_dense(*provider, o.query_id, text, *corpus, pool, o.k));
    return kExitOk;
  }

  const auto index = !o.index_path.empty() ? load_index(o.index_path)
                     : corpus             ? build_index(*corpus, IndexField::facts, c.bm25)
                                          : throw ConfigError("search needs --index or a corpus");
  if (o.query_id.empty()) {
    for (const auto& d : index.docs()) pool.push_back(d.id);
  }
  print_run(out, search_bm25(index, text, pool, o.k, o.query_id));
  return kExitOk;
}

inline int cmd_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto corpus = load_corpus(c.corpus_path);
  ExperimentSetup setup;
  setup.retriever = c.retriever;
  setup.bm25 = c.bm25;
  setup.rows = c.effective_rows();
  setup.extraction = c.extraction;
  setup.noise_count = c.noise_count;
  setup.repeat = c.repeat;
  setup.k_set = c.k_set;
  setup.seed = c.seed;
  setup.slice = c.slice;

  std::optional<ConceptMap> imported;
  std::optional<ConceptMap> oracle;
  std::optional<LexiconTagger> tagger;
  std::optional<ExternalVectors> vectors;
  if (!c.imported_path.empty()) {
    imported = load_concept_file(c.imported_path);
    setup.imported = &*imported;
  }
  if (!c.oracle_path.empty()) {
    oracle = load_concept_file(c.oracle_path);
    setup.oracle = &*oracle;
  } else if (std::find(setup.rows.begin(), setup.rows.end(), ConceptSource::extracted_oracle) !=
             setup.rows.end()) {
    tagger = load_tagger(c);
    setup.tagger = &*tagger;
  }
  if (c.retriever == RetrieverKind::dense && !c.vectors_path.empty()) {
    vectors = load_external_vectors(c.vectors_path);
    setup.dense_provider = &*vectors;
  }

  const auto result = run_experiment(corpus, setup);
  const auto json_path = output_path(c, kReportJsonName);
  const auto text_path = output_path(c, kReportTextName);
  {
    std::ofstream f(json_path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + json_path.string() + "'");
    f << report_json(result).dump(2) << '\n';
  }
  {
    std::ofstream f(text_path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + text_path.string() + "'");
    print_report_table(f, result);
  }
  print_report_table(out, result);
  err << "wrote " << json_path.string() << " and " << text_path.string() << '\n';
  return kExitOk;
}

/// Entry point shared by the `pcr` binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept-augmented prior case retrieval", "pcr"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "Experiment config (INI)");
  app.add_option("--seed", o.seed, "Random seed (overrides config)");
  app.add_option("--out", o.out_dir, "Output directory (overrides config)");
  app.add_option("--corpus", o.corpus_path, "Corpus file (overrides config)");

  auto* extract = app.add_subcommand("extract", "Extract key concepts from every reasoning section");
  auto* index = app.add_subcommand("index", "Build and save a BM25 index");
  index->add_option("--field", o.field, "facts or facts+concepts");
  index->add_option("--concepts", o.concepts_path, "Concept file for facts+concepts");
  auto* search = app.add_subcommand("search", "Rank candidates for a query");
  search->add_option("--index", o.index_path, "Saved BM25 index");
  search->add_option("--query-id", o.query_id, "Query document id (facts used as query)");
  search->add_option("--text", o.query_text, "Free-text query");
  search->add_option("-k", o.k, "Number of results");
  search->add_option("--retriever", o.retriever, "bm25 or dense");
  auto* evaluate = app.add_subcommand("evaluate", "Run the experiment table");
  evaluate->add_option("--row", o.rows, "Row to run (baseline, imported, noise, oracle); repeatable");
  evaluate->add_option("--retriever", o.retriever, "bm25 or dense");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const auto config = resolve_config(o);
    validate_config(config, !(search->parsed() && !o.index_path.empty()));
    if (extract->parsed()) return cmd_extract(config, out, err);
    if (index->parsed()) return cmd_index(config, o, out);
    if (search->parsed()) return cmd_search(config, o, out);
    if (evaluate->parsed()) return cmd_evaluate(config, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace pcr::cli

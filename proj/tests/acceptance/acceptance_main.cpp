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

// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "pcr/pcr.hpp"

namespace {

using namespace pcr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const LexiconTagger& tagger() {
  static const LexiconTagger t(Lexicon::load(PCR_LEXICON_PATH));
  return t;
}

Eigen::MatrixXd similarity_from_rows(Eigen::MatrixXd b) {
  for (Eigen::Index i = 0; i < b.rows(); ++i) b.row(i).normalize();
  Eigen::MatrixXd s = b * b.transpose();
  s.diagonal().setOnes();
  return s;
}

Outcome dpp_normalization() {
  Outcome o;
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const auto k = build_kernel(oracle::random_quality(n, rng), oracle::random_similarity(n, rng));
    const Eigen::MatrixXd shifted = k.matrix() + Eigen::MatrixXd::Identity(k.size(), k.size());
    const double direct = shifted.determinant();
    const double sum = oracle::subset_det_sum(k.matrix());
    const double lib = std::exp(log_normalizer(k));
    worst = std::max({worst, std::abs(sum - direct) / direct, std::abs(lib - direct) / direct});
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-8, "relative error " + fmt("%.3g", worst));
  o.require(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s");
  if (o.ok) o.detail = "max rel err " + fmt("%.2g", worst) + ", " + fmt("%.2f", secs) + " s";
  return o;
}

Outcome pair_determinant() {
  Outcome o;
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> q_dist(0.05, 2.0), s_dist(-0.999, 0.999);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double qi = q_dist(rng), qj = q_dist(rng), s = s_dist(rng);
    Eigen::MatrixXd sim(2, 2);
    sim << 1.0, s, s, 1.0;
    const auto k = build_kernel(Eigen::Vector2d(qi, qj), sim);
    const double det = std::exp(subset_log_det(k, std::vector<std::size_t>{0, 1}));
    worst = std::max(worst, std::abs(det - qi * qi * qj * qj * (1.0 - s * s)));
  }
  o.require(worst <= 1e-12, "abs error " + fmt("%.3g", worst));
  if (o.ok) o.detail = "max abs err " + fmt("%.2g", worst);
  return o;
}

Outcome greedy_matches_naive() {
  Outcome o;
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (int trial = 0; trial < 200 && o.ok; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    const auto k = build_kernel(oracle::random_quality(n, rng), oracle::random_similarity(n, rng));
    const std::size_t budget = std::min<std::size_t>(n, 10);
    const auto fast = greedy_map(k, budget, false);
    const auto slow = oracle::naive_greedy(k.matrix(), budget, false);
    o.require(fast.selected == slow.selected, "selection differs on trial " + std::to_string(trial));
    for (std::size_t i = 0; o.ok && i < slow.gains.size(); ++i) {
      worst = std::max(worst, std::abs(fast.gains[i] - slow.gains[i]));
    }
  }
  o.require(worst <= 1e-9, "gain error " + fmt("%.3g", worst));
  if (o.ok) o.detail = "200 kernels, max gain err " + fmt("%.2g", worst);
  return o;
}

Outcome duplicate_repulsion() {
  Outcome o;
  std::mt19937_64 rng(104);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100 && o.ok; ++trial) {
    const auto n = static_cast<Eigen::Index>(3 + rng() % 10);
    Eigen::MatrixXd b(n, n + 2);
    for (auto& x : b.reshaped()) x = g(rng);
    const auto i = static_cast<Eigen::Index>(rng() % static_cast<std::size_t>(n));
    auto j = static_cast<Eigen::Index>(rng() % static_cast<std::size_t>(n - 1));
    if (j >= i) ++j;
    b.row(j) = b.row(i);
    Eigen::MatrixXd s = similarity_from_rows(b);
    s(i, j) = s(j, i) = 1.0;
    const auto k = build_kernel(oracle::random_quality(static_cast<std::size_t>(n), rng), s);
    const auto sel = greedy_map(k, static_cast<std::size_t>(n), false).selected;
    const bool has_i = std::find(sel.begin(), sel.end(), static_cast<std::size_t>(i)) != sel.end();
    const bool has_j = std::find(sel.begin(), sel.end(), static_cast<std::size_t>(j)) != sel.end();
    o.require(!(has_i && has_j), "duplicate pair co-selected on trial " + std::to_string(trial));
  }
  if (o.ok) o.detail = "100 trials";
  return o;
}

Outcome quality_scaling() {
  Outcome o;
  std::mt19937_64 rng(105);
  for (int trial = 0; trial < 50 && o.ok; ++trial) {
    const std::size_t n = 2 + rng() % 14;
    const auto q = oracle::random_quality(n, rng);
    const auto s = oracle::random_similarity(n, rng);
    const auto base = greedy_map(build_kernel(q, s), n, false).selected;
    for (const double c : {0.1, 10.0}) {
      o.require(greedy_map(build_kernel(c * q, s), n, false).selected == base,
                "sequence changed under scale " + fmt("%g", c) + " on trial " + std::to_string(trial));
    }
  }
  if (o.ok) o.detail = "50 kernels, c in {0.1, 10}";
  return o;
}

Corpus corpus_from_tokens(const std::vector<std::vector<std::string>>& raw) {
  std::vector<Document> docs;
  for (std::size_t d = 0; d < raw.size(); ++d) {
    std::string facts;
    for (const auto& t : raw[d]) facts += t + " ";
    char id[16];
    std::snprintf(id, sizeof id, "d%02zu", d);
    docs.push_back(Document::make(id, *Date::parse("2000-01-" + std::to_string(1 + d % 28)), facts, ""));
  }
  return Corpus::from_documents(std::move(docs));
}

Outcome bm25_oracle() {
  Outcome o;
  const auto hand = build_index(corpus_from_tokens({{"a", "b"}, {"a"}}));
  const double s = bm25_score(hand, {"b"}, "d00");
  o.require(std::abs(s - 0.6100) <= 1e-4, "hand example scored " + fmt("%.6f", s));

  std::mt19937_64 rng(106);
  for (int trial = 0; trial < 50 && o.ok; ++trial) {
    std::vector<std::vector<std::string>> raw(20);
    for (auto& d : raw) {
      const auto len = 1 + rng() % 8;
      for (std::size_t i = 0; i < len; ++i) d.push_back(std::string(1, static_cast<char>('a' + rng() % 10)));
    }
    const auto corpus = corpus_from_tokens(raw);
    const auto index = build_index(corpus);
    std::vector<std::string> query;
    for (int i = 0; i < 3; ++i) query.push_back(std::string(1, static_cast<char>('a' + rng() % 10)));
    std::string query_text;
    for (const auto& t : query) query_text += t + " ";

    std::vector<std::tuple<double, Date, std::string>> expect;
    std::vector<std::string> pool;
    for (const auto& doc : corpus) {
      pool.push_back(doc.id);
      const auto d = static_cast<std::size_t>(std::stoul(doc.id.substr(1)));
      expect.emplace_back(-oracle::bm25(raw, d, query, 1.2, 0.75), doc.date, doc.id);
    }
    std::sort(expect.begin(), expect.end(), [](const auto& x, const auto& y) {
      if (std::abs(std::get<0>(x) - std::get<0>(y)) > 1e-12) return std::get<0>(x) < std::get<0>(y);
      return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
    });
    const auto run = search_bm25(index, query_text, pool, pool.size());
    o.require(run.results.size() == expect.size(), "ranking length differs");
    for (std::size_t r = 0; o.ok && r < expect.size(); ++r) {
      o.require(run.results[r].id == std::get<2>(expect[r]), "rank " + std::to_string(r + 1) + " differs on trial " +
                                                                  std::to_string(trial));
      o.require(std::abs(run.results[r].score + std::get<0>(expect[r])) <= 1e-10, "score differs");
    }
  }
  if (o.ok) o.detail = "hand " + fmt("%.4f", s) + ", 50 random 20-doc rankings";
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  RankedRun axb{"q", {{"a", 3}, {"x", 2}, {"b", 1}}};
  const std::vector<std::string> ab = {"a", "b"};
  const double ap = average_precision(axb, ab);
  o.require(std::abs(ap - 0.8333) <= 1e-4, "AP([a,x,b]) = " + fmt("%.6f", ap));

  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 100 && o.ok; ++trial) {
    std::vector<std::string> universe;
    for (int i = 0; i < 12; ++i) universe.push_back("d" + std::to_string(i));
    std::shuffle(universe.begin(), universe.end(), rng);
    const std::vector<std::string> ranking(universe.begin(), universe.begin() + static_cast<std::ptrdiff_t>(3 + rng() % 10));
    std::set<std::string> rel;
    while (rel.empty()) {
      for (const auto& d : universe) {
        if (rng() % 3 == 0) rel.insert(d);
      }
    }
    const std::vector<std::string> rel_ids(rel.begin(), rel.end());
    RankedRun run{"q", {}};
    for (std::size_t i = 0; i < ranking.size(); ++i) run.results.push_back({ranking[i], -static_cast<double>(i)});
    double prev = 0.0;
    for (std::size_t k = 1; k <= 14; ++k) {
      const double r = recall_at_k(run, rel_ids, k);
      o.require(std::abs(r - oracle::recall(ranking, rel, k)) <= 1e-15, "recall mismatch");
      o.require(r >= prev, "recall not monotone in k");
      prev = r;
    }
    o.require(std::abs(average_precision(run, rel_ids) - oracle::average_precision(ranking, rel)) <= 1e-15,
              "AP mismatch on trial " + std::to_string(trial));
  }
  if (o.ok) o.detail = "AP([a,x,b]) = " + fmt("%.4f", ap) + ", 100 random rankings";
  return o;
}

CandidateConcept candidate(std::string text, std::size_t begin, std::size_t end) {
  CandidateConcept c;
  c.text = std::move(text);
  c.occurrences.push_back({0, begin, end});
  return c;
}

Outcome position_regularizer_check() {
  Outcome o;
  const std::vector<CitationMarker> marker = {{"x", 5, {}}};
  const auto rho = position_regularizer({candidate("x", 4, 5), candidate("y", 2, 4)}, marker);
  o.require(std::abs(rho[0] - 0.7445) <= 1e-4 && std::abs(rho[1] - 0.2555) <= 1e-4,
            "rho = (" + fmt("%.6f", rho[0]) + ", " + fmt("%.6f", rho[1]) + ")");

  std::mt19937_64 rng(108);
  for (int trial = 0; trial < 500 && o.ok; ++trial) {
    std::vector<std::size_t> k(1 + rng() % 40);
    for (auto& v : k) v = 1 + rng() % 200;
    const auto r = softmax_inverse_distance(k);
    double sum = 0.0;
    for (const double v : r) sum += v;
    o.require(std::abs(sum - 1.0) <= 1e-12, "sum = " + fmt("%.17g", sum));
  }
  std::vector<CandidateConcept> three = {candidate("a", 0, 1), candidate("b", 1, 2), candidate("c", 2, 3)};
  for (const double v : position_regularizer(three, {})) o.require(v == 1.0 / 3.0, "not uniform without markers");
  if (o.ok) o.detail = "rho = (" + fmt("%.4f", rho[0]) + ", " + fmt("%.4f", rho[1]) + ")";
  return o;
}

TfidfProvider provider_over(const std::vector<std::string>& texts) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    docs.push_back(Document::make("t" + std::to_string(i), *Date::parse("2000-01-01"), texts[i], ""));
  }
  return TfidfProvider(fit_tfidf(Corpus::from_documents(std::move(docs)), TextField::facts));
}

Outcome masked_relevance_check() {
  Outcome o;
  const auto p = provider_over({"a b c d"});
  const double total = masked_relevance(split_paragraphs("c d")[0], "c d", p);
  o.require(total == 1.0, "total mask gave " + fmt("%.17g", total));
  const double hand = masked_relevance(split_paragraphs("a b c d")[0], "c d", p);
  o.require(std::abs(hand - 0.2929) <= 1e-4, "hand fixture gave " + fmt("%.6f", hand));

  const auto q = provider_over({"court x y z", "q r s", "court"});
  double r[2];
  int i = 0;
  for (const char* text : {"court x y z", "court x y z\n\nq r s\n\nr s"}) {
    const auto a = analyze_reasoning(text, tagger());
    r[i++] = score_quality({candidate("court", 0, 1)}, a.paragraphs, q, a.markers)[0].raw_relevance;
  }
  o.require(r[0] == r[1], "relevance changed when adding concept-free paragraphs");
  if (o.ok) o.detail = "total mask 1, hand fixture " + fmt("%.4f", hand);
  return o;
}

Outcome synthetic_direction() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto corpus = load_corpus(PCR_SYNTHETIC_CORPUS);
  o.require(corpus.size() >= 200, "synthetic corpus has only " + std::to_string(corpus.size()) + " documents");
  ExperimentSetup setup;
  setup.rows = {ConceptSource::none, ConceptSource::extracted_oracle};
  setup.tagger = &tagger();
  const auto result = run_experiment(corpus, setup);
  const double secs = seconds_since(t0);
  const double base = result.rows[0].map, oracle_map = result.rows[1].map;
  o.require(oracle_map >= base, "oracle MAP below baseline");
  o.require(oracle_map >= 1.1 * base, "relative gain " + fmt("%.1f", 100.0 * (oracle_map / base - 1.0)) + "% < 10%");
  o.require(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s");
  o.detail = "MAP " + fmt("%.2f", 100.0 * base) + " -> " + fmt("%.2f", 100.0 * oracle_map) + " over " +
             std::to_string(result.rows[0].query_count()) + " queries, " + fmt("%.2f", secs) + " s" +
             (o.ok ? "" : "; " + o.detail);
  return o;
}

Outcome coverage_check() {
  Outcome o;
  const auto verbatim = concept_coverage({"pretrial detention", "bail"}, "The pretrial detention and bail.");
  o.require(verbatim.word_pct == 100.0 && verbatim.concept_pct == 100.0, "verbatim not (100,100)");
  const auto disjoint = concept_coverage({"x y", "z"}, "a b c");
  o.require(disjoint.word_pct == 0.0 && disjoint.concept_pct == 0.0, "disjoint not (0,0)");
  // "a b" covered as a phrase; of the words {a, b, c, z} three appear.
  const auto mixed = concept_coverage({"a b", "c z"}, "a b c");
  o.require(mixed.word_pct == 75.0 && mixed.concept_pct == 50.0,
            "mixed gave (" + fmt("%g", mixed.word_pct) + "," + fmt("%g", mixed.concept_pct) + ")");
  if (o.ok) o.detail = "(100,100), (0,0), (75,50)";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome end_to_end_determinism() {
  Outcome o;
  const auto root = fs::temp_directory_path() / ("pcr_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string cli = PCR_CLI_PATH;
  const std::string corpus = PCR_SYNTHETIC_CORPUS;
  for (const char* run : {"a", "b"}) {
    const auto dir = root / run;
    fs::create_directories(dir);
    std::ofstream(dir / "exp.ini") << "seed = 11\n[corpus]\npath = " << corpus
                                   << "\n[concepts]\nimported = concepts.jsonl\n";
    const std::string base = "\"" + cli + "\" --corpus \"" + corpus + "\" --out \"" + dir.string() + "\" ";
    for (const std::string& cmd : {base + "extract", base + "index",
                                  "\"" + cli + "\" --config \"" + (dir / "exp.ini").string() + "\" --out \"" +
                                      dir.string() + "\" evaluate"}) {
      const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
      o.require(rc == 0, "command failed: " + cmd);
    }
  }
  for (const char* name : {"report.json", "report.txt", "index.pcridx", "concepts.jsonl"}) {
    const auto a = slurp(root / "a" / name);
    o.require(!a.empty(), std::string(name) + " missing");
    o.require(a == slurp(root / "b" / name), std::string(name) + " differs between runs");
  }
  fs::remove_all(root);
  if (o.ok) o.detail = "report, index and concept files byte-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"DPP normalization", dpp_normalization},
      {"2x2 determinant", pair_determinant},
      {"greedy vs naive", greedy_matches_naive},
      {"duplicate repulsion", duplicate_repulsion},
      {"quality scaling invariance", quality_scaling},
      {"BM25 oracle", bm25_oracle},
      {"metric oracles", metric_oracles},
      {"position regularizer", position_regularizer_check},
      {"masked relevance", masked_relevance_check},
      {"synthetic oracle vs baseline", synthetic_direction},
      {"coverage metric", coverage_check},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.ok ? 0 : 1;
    std::printf("[%s] AC-%zu %s: %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}

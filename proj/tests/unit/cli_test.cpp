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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pcr/cli.hpp"

namespace pcr {
namespace {

namespace fs = std::filesystem;

const std::string kFiveDocs = std::string(PCR_TEST_DATA_DIR) + "/five_docs.jsonl";
const std::string kSynthetic = PCR_SYNTHETIC_CORPUS;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome pcr_run(std::initializer_list<std::string> args) {
  std::vector<std::string> owned = {"pcr"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("pcr_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string sub(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(pcr_run({}).code, cli::kExitUsage);
  EXPECT_EQ(pcr_run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(pcr_run({"--help"}).code, cli::kExitOk);
}

TEST_F(Cli, MissingCorpusIsConfigError) {
  const auto r = pcr_run({"--corpus", sub("absent.jsonl"), "extract"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("absent.jsonl"), std::string::npos) << r.err;
  EXPECT_EQ(pcr_run({"evaluate"}).code, cli::kExitUsage);
}

TEST_F(Cli, UnknownQueryIdIsDataError) {
  const auto r = pcr_run({"--corpus", kFiveDocs, "search", "--query-id", "zz"});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("zz"), std::string::npos) << r.err;
}

TEST_F(Cli, SearchNeedsExactlyOneQuery) {
  EXPECT_EQ(pcr_run({"--corpus", kFiveDocs, "search"}).code, cli::kExitUsage);
  EXPECT_EQ(pcr_run({"--corpus", kFiveDocs, "search", "--query-id", "d3", "--text", "x"}).code, cli::kExitUsage);
}

TEST_F(Cli, ExtractWritesLoadableConceptFile) {
  const auto r = pcr_run({"--corpus", kFiveDocs, "--out", dir_.string(), "extract"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.err.find("warning: document 'd5'"), std::string::npos) << r.err;
  const auto concepts = load_concept_file(sub(cli::kConceptFileName));
  EXPECT_EQ(concepts.size(), 4u);
  EXPECT_FALSE(concepts.contains("d5"));
  EXPECT_EQ(lines_of(r.out).size(), 4u);

  // Usable as the oracle source of an evaluation.
  const auto ini = sub("exp.ini");
  std::ofstream(ini) << "[corpus]\npath = " << kFiveDocs << "\n[concepts]\noracle = " << cli::kConceptFileName
                     << "\n[eval]\nk = 1,2\nfraction = 1.0\n";
  const auto e = pcr_run({"--config", ini, "--out", sub("eval"), "evaluate"});
  EXPECT_EQ(e.code, cli::kExitOk) << e.err;
}

TEST_F(Cli, SavedIndexSearchMatchesInMemory) {
  ASSERT_EQ(pcr_run({"--corpus", kSynthetic, "--out", dir_.string(), "index"}).code, cli::kExitOk);
  const auto corpus = load_corpus(kSynthetic);
  const auto& query = corpus.documents().back();
  const auto r = pcr_run({"--corpus", kSynthetic, "search", "--index", sub(cli::kIndexFileName), "--query-id",
                          query.id, "-k", "3"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 3u);

  const auto expected =
      search_bm25(build_index(corpus, IndexField::facts, {}), query.facts, candidate_pool(corpus, query.id), 3, query.id);
  std::ostringstream want;
  cli::print_run(want, expected);
  EXPECT_EQ(r.out, want.str());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    EXPECT_EQ(lines[i].rfind(std::to_string(i + 1) + "\t" + expected.results[i].id + "\t", 0), 0u) << lines[i];
    EXPECT_EQ(lines[i].size() - lines[i].rfind('.') - 1, 6u) << lines[i];
  }
}

TEST_F(Cli, FacetedIndexRequiresConcepts) {
  EXPECT_EQ(pcr_run({"--corpus", kFiveDocs, "--out", dir_.string(), "index", "--field", "facts+concepts"}).code,
            cli::kExitUsage);
  EXPECT_EQ(pcr_run({"--corpus", kFiveDocs, "--out", dir_.string(), "index", "--field", "reasoning"}).code,
            cli::kExitUsage);
}

TEST_F(Cli, DenseFreeTextFindsMatchingDocument) {
  const auto r = pcr_run({"--corpus", kFiveDocs, "search", "--retriever", "dense", "--text", "land expropriated"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0].rfind("1\td5\t", 0), 0u) << lines[0];
}

TEST_F(Cli, EvaluateWritesReportsAndHonoursRowSelection) {
  const auto r = pcr_run({"--corpus", kSynthetic, "--out", dir_.string(), "evaluate", "--row", "oracle"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto report = nlohmann::json::parse(slurp(sub(cli::kReportJsonName)));
  ASSERT_EQ(report["rows"].size(), 1u);
  EXPECT_EQ(report["rows"][0]["name"], "+ Oracle");
  EXPECT_EQ(slurp(sub(cli::kReportTextName)), r.out);
  EXPECT_NE(r.out.find("+ Oracle"), std::string::npos) << r.out;
}

TEST_F(Cli, RerunsAreByteIdentical) {
  for (const char* run : {"a", "b"}) {
    const auto out = sub(run);
    ASSERT_EQ(pcr_run({"--corpus", kSynthetic, "--out", out, "--seed", "7", "evaluate"}).code, cli::kExitOk);
    ASSERT_EQ(pcr_run({"--corpus", kSynthetic, "--out", out, "extract"}).code, cli::kExitOk);
    ASSERT_EQ(pcr_run({"--corpus", kSynthetic, "--out", out, "index"}).code, cli::kExitOk);
  }
  for (const char* name : {cli::kReportJsonName, cli::kReportTextName, cli::kConceptFileName, cli::kIndexFileName}) {
    const auto a = slurp(dir_ / "a" / name);
    EXPECT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, slurp(dir_ / "b" / name)) << name;
  }
}

TEST_F(Cli, SeedOnlyAffectsNoiseRows) {
  ASSERT_EQ(pcr_run({"--corpus", kSynthetic, "--out", dir_.string(), "extract"}).code, cli::kExitOk);
  const auto ini = sub("exp.ini");
  std::ofstream(ini) << "[corpus]\npath = " << kSynthetic << "\n[concepts]\nimported = " << cli::kConceptFileName
                     << "\n[eval]\nrows = baseline,imported,noise\n";
  ASSERT_EQ(pcr_run({"--config", ini, "--seed", "1", "--out", sub("s1"), "evaluate"}).code, cli::kExitOk);
  ASSERT_EQ(pcr_run({"--config", ini, "--seed", "2", "--out", sub("s2"), "evaluate"}).code, cli::kExitOk);
  const auto a = nlohmann::json::parse(slurp(dir_ / "s1" / cli::kReportJsonName));
  const auto b = nlohmann::json::parse(slurp(dir_ / "s2" / cli::kReportJsonName));
  ASSERT_EQ(a["rows"].size(), 3u);
  EXPECT_EQ(a["rows"][0], b["rows"][0]);
  EXPECT_EQ(a["rows"][1], b["rows"][1]);
  EXPECT_NE(a["rows"][2], b["rows"][2]);
}

}  // namespace
}  // namespace pcr

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

// Writes the bundled synthetic corpus (see pcr/synthetic.hpp).

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pcr/corpus.hpp"
#include "pcr/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic concept-mediated case corpus"};
  std::string out_path;
  pcr::synthetic::Options opt;
  app.add_option("output", out_path, "Corpus file to write")->required();
  app.add_option("--docs", opt.num_docs, "Number of documents");
  app.add_option("--seed", opt.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto generated = pcr::synthetic::generate(opt);
    pcr::save_corpus(out_path, generated.corpus);
    std::cerr << "wrote " << generated.corpus.size() << " documents to " << out_path << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

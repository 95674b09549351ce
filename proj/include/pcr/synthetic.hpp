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

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pcr/concepts.hpp"
#include "pcr/corpus.hpp"

// Deterministic synthetic case corpus in which relevance is mediated by
// legal concepts. Every document belongs to one topic. Its reasoning cites
// earlier documents of the same topic, with the topic's concept phrases
// written next to each citation marker. Its facts mention only a couple of
// the topic's words, mixed with words of other topics and shared filler,
// so facts alone are a weak relevance signal and the reasoning's concepts
// a strong one.

namespace pcr::synthetic {

struct Topic {
  std::array<std::string_view, 3> phrases;
};

inline constexpr std::array<Topic, 12> kTopics = {{
    {{"pretrial detention", "custodial review", "bail hearing"}},
    {{"journalistic expression", "press freedom", "defamation proceedings"}},
    {{"property expropriation", "compensation scheme", "land registry"}},
    {{"family reunification", "custody dispute", "parental authority"}},
    {{"inhuman treatment", "ill-treatment allegations", "forensic examination"}},
    {{"procedural delay", "reasonable time", "case backlog"}},
    {{"telephone surveillance", "data retention", "private correspondence"}},
    {{"religious worship", "conscientious objection", "religious community"}},
    {{"peaceful demonstration", "trade union", "protest ban"}},
    {{"asylum procedure", "deportation order", "refugee status"}},
    {{"electoral commission", "ballot secrecy", "candidate registration"}},
    {{"industrial pollution", "environmental hazard", "noise nuisance"}},
}};

inline constexpr std::array<std::string_view, 12> kFactFiller = {
    "The applicant lodged a complaint with the regional office.",
    "A letter was sent to the applicant by the local administration.",
    "The applicant met several officials at the municipal building.",
    "The domestic authorities examined the request in due course.",
    "The applicant's representative submitted further documents.",
    "A meeting took place between the applicant and the mayor.",
    "The file was forwarded to the competent department.",
    "The applicant wrote to the ministry on several occasions.",
    "The district office replied to the applicant in writing.",
    "The applicant was informed of the outcome by telephone.",
    "Witnesses gave statements to the investigating officer.",
    "The applicant paid the required fee to the registry.",
};

inline constexpr std::array<std::string_view, 6> kReasoningFiller = {
    "The Court reiterates the general principles established in its case-law.",
    "The Government contested that argument.",
    "The applicant maintained the complaint before the Court.",
    "The Court sees no reason to depart from its earlier findings.",
    "The domestic courts gave detailed reasons for their decisions.",
    "The parties' submissions are summarised below.",
};

struct Options {
  std::size_t num_docs = 240;
  std::uint64_t seed = 7;
  std::size_t fact_topic_words = 2;    // own-topic words in the facts
  std::size_t fact_distractors = 3;    // other-topic words in the facts
  std::size_t max_citations = 5;
};

struct GeneratedCorpus {
  Corpus corpus;
  std::vector<std::size_t> topic_of;  // parallel to corpus iteration order
};

namespace detail {

inline std::vector<std::string> topic_words(const Topic& t) {
  std::vector<std::string> out;
  for (const auto p : t.phrases) {
    for (const auto& tok : tokenize(p)) out.push_back(tok.text);
  }
  return out;
}

}  // namespace detail

inline GeneratedCorpus generate(const Options& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  auto draw = [&](std::size_t bound) {
    return static_cast<std::size_t>(pcr::detail::bounded_draw(rng, bound));
  };

  using namespace std::chrono;
  sys_days day = sys_days{year{1995} / January / 2};

  std::vector<Document> docs;
  std::vector<std::size_t> topics;
  std::vector<std::vector<std::size_t>> by_topic(kTopics.size());
  char id_buf[16];

  for (std::size_t i = 0; i < opt.num_docs; ++i) {
    // Roughly every seventh decision shares its date with the previous one.
    if (i > 0 && draw(7) != 0) day += days{1 + static_cast<int>(draw(20))};
    const std::size_t topic = draw(kTopics.size());
    std::snprintf(id_buf, sizeof id_buf, "c%04zu", i + 1);
    const std::string id = id_buf;
    const Date date{year_month_day{day}};

    // Facts.
    std::string facts = "The applicant was born in " + std::to_string(1940 + draw(50)) + ".";
    const auto own = detail::topic_words(kTopics[topic]);
    for (std::size_t s = 0; s < 4; ++s) {
      facts += " ";
      facts += kFactFiller[draw(kFactFiller.size())];
    }
    for (std::size_t w = 0; w < opt.fact_topic_words; ++w) {
      facts += " The file referred to " + own[draw(own.size())] + ".";
    }
    for (std::size_t w = 0; w < opt.fact_distractors; ++w) {
      const auto other = detail::topic_words(kTopics[draw(kTopics.size())]);
      facts += " The file referred to " + other[draw(other.size())] + ".";
    }

    // Citations: earlier same-topic decisions dated strictly before.
    std::vector<std::string> cited;
    std::vector<std::size_t> eligible;
    for (const auto j : by_topic[topic]) {
      if (docs[j].date < date) eligible.push_back(j);
    }
    const std::size_t want = std::min(eligible.size(), 2 + draw(opt.max_citations - 1));
    for (std::size_t c = 0; c < want; ++c) {
      const auto pick = c + draw(eligible.size() - c);
      std::swap(eligible[c], eligible[pick]);
      cited.push_back(docs[eligible[c]].id);
    }

    // Reasoning.
    std::string reasoning = std::string(kReasoningFiller[draw(kReasoningFiller.size())]);
    for (const auto& target : cited) {
      const auto& phrases = kTopics[topic].phrases;
      const auto a = draw(phrases.size());
      const auto b = (a + 1 + draw(phrases.size() - 1)) % phrases.size();
      reasoning += "\n\n";
      reasoning += kReasoningFiller[draw(kReasoningFiller.size())];
      reasoning += " The Court notes the " + std::string(phrases[a]) + " and the " +
                   std::string(phrases[b]) + " [[CITE:" + target + "]].";
    }
    reasoning += "\n\nThere has accordingly been a violation of the Convention.";

    by_topic[topic].push_back(docs.size());
    topics.push_back(topic);
    docs.push_back(Document::make(id, date, std::move(facts), std::move(reasoning)));
  }

  GeneratedCorpus out;
  // Generation order is already (date, id) order.
  out.topic_of = std::move(topics);
  out.corpus = Corpus::from_documents(std::move(docs));
  return out;
}

}  // namespace pcr::synthetic

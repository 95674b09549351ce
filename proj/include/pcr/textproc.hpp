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

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pcr/error.hpp"

namespace pcr {

/// Half-open byte range [begin, end) into a source string.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Token {
  std::string text;  // lowercased, except citation markers which keep case
  std::string tag;   // empty until tagged
  std::size_t index = 0;
  CharSpan span;
};

struct Paragraph {
  std::size_t index = 0;
  std::string text;
  CharSpan span;
};

struct CitationMarker {
  std::string target_id;
  std::size_t token_index = 0;
  CharSpan span;

  friend bool operator==(const CitationMarker&, const CitationMarker&) = default;
};

inline constexpr std::string_view kCiteOpen = "[[CITE:";
inline constexpr std::string_view kCiteClose = "]]";
inline constexpr std::string_view kCiteTag = "CITE";

/// Ids usable as citation targets: non-empty, no whitespace, control
/// characters or square brackets.
inline bool is_valid_document_id(std::string_view id) {
  if (id.empty()) return false;
  for (unsigned char c : id) {
    if (c <= 0x20 || c == 0x7f || c == '[' || c == ']') return false;
  }
  return true;
}

namespace detail {

struct Utf8Char {
  char32_t cp = 0;
  std::size_t len = 1;
  bool valid = false;
};

inline Utf8Char decode_utf8(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1, true};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0, 1, false};
  }
  if (pos + len > s.size()) return {0, 1, false};
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return {0, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len, true};
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Letters and digits. Outside ASCII we treat everything as a letter except
// the Latin-1 punctuation block and the general punctuation/symbol planes.
inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= '0' && cp <= '9');
  }
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp == 0xFEFF) return false;
  return true;
}

inline bool is_joiner(char32_t cp) {
  return cp == '-' || cp == '\'' || cp == 0x2019;
}

inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x138 &&
      cp != 0x149 && cp != 0x17F) {
    // Latin Extended-A alternates upper/lower, with a parity shift in the
    // 0x139..0x148 and 0x179..0x17E ranges.
    const bool shifted = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    const bool upper = shifted ? (cp % 2 == 1) : (cp % 2 == 0);
    return upper ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace detail

inline bool is_citation_token(const Token& t) {
  return t.text.starts_with(kCiteOpen);
}

/// Splits text into lowercased word tokens. A word is a maximal run of
/// letters/digits, with hyphens and apostrophes allowed between two word
/// characters. `[[CITE:<id>]]` is emitted verbatim as one token; an opening
/// `[[CITE:` with no closing brackets before whitespace is emitted as-is so
/// that locate_citation_markers can report it.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t pos = 0;
  const std::size_t n = text.size();
  while (pos < n) {
    if (text.substr(pos).starts_with(kCiteOpen)) {
      std::size_t j = pos + kCiteOpen.size();
      std::size_t end = std::string_view::npos;
      while (j < n && !detail::is_space(text[j])) {
        if (text.substr(j).starts_with(kCiteClose)) {
          end = j + kCiteClose.size();
          break;
        }
        ++j;
      }
      if (end == std::string_view::npos) end = j;
      out.push_back(Token{std::string(text.substr(pos, end - pos)), "", out.size(), {pos, end}});
      pos = end;
      continue;
    }

    const auto ch = detail::decode_utf8(text, pos);
    if (!ch.valid || !detail::is_word_char(ch.cp)) {
      pos += ch.len;
      continue;
    }

    const std::size_t start = pos;
    std::string word;
    while (pos < n) {
      const auto c = detail::decode_utf8(text, pos);
      if (c.valid && detail::is_word_char(c.cp)) {
        detail::append_utf8(word, detail::to_lower(c.cp));
        pos += c.len;
        continue;
      }
      if (c.valid && detail::is_joiner(c.cp) && pos + c.len < n) {
        const auto next = detail::decode_utf8(text, pos + c.len);
        if (next.valid && detail::is_word_char(next.cp)) {
          detail::append_utf8(word, c.cp == 0x2019 ? U'\'' : c.cp);
          pos += c.len;
          continue;
        }
      }
      break;
    }
    out.push_back(Token{std::move(word), "", out.size(), {start, pos}});
  }
  return out;
}

/// Token texts joined by single spaces.
inline std::string join_tokens(const std::vector<Token>& tokens, std::size_t begin,
                               std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i].text;
  }
  return out;
}

inline std::string join_tokens(const std::vector<Token>& tokens) {
  return join_tokens(tokens, 0, tokens.size());
}

/// Lowercased, whitespace-collapsed form used to key phrases.
inline std::string normalize_phrase(std::string_view text) {
  return join_tokens(tokenize(text));
}

// ---------------------------------------------------------------------------
// Part-of-speech tagging

/// word -> Penn tag map, loaded from `word<TAB>TAG` lines.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::unordered_map<std::string, std::string> entries)
      : entries_(std::move(entries)) {}

  static Lexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open lexicon file '" + path + "'");
    std::unordered_map<std::string, std::string> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto body = detail::trim(line);
      if (body.empty() || body.front() == '#') continue;
      const auto tab = body.find('\t');
      if (tab == std::string_view::npos) {
        throw ConfigError("lexicon '" + path + "' line " + std::to_string(lineno) +
                          ": expected word<TAB>TAG");
      }
      const auto word = detail::trim(body.substr(0, tab));
      const auto tag = detail::trim(body.substr(tab + 1));
      if (word.empty() || tag.empty()) {
        throw ConfigError("lexicon '" + path + "' line " + std::to_string(lineno) +
                          ": empty word or tag");
      }
      entries.insert_or_assign(normalize_phrase(word), std::string(tag));
    }
    return Lexicon(std::move(entries));
  }

  const std::string* find(const std::string& word) const {
    const auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::string> entries_;
};

/// Seam for alternative taggers (e.g. pre-tagged corpora).
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual std::vector<Token> tag(std::vector<Token> tokens) const = 0;
};

class LexiconTagger final : public Tagger {
 public:
  explicit LexiconTagger(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

  std::vector<Token> tag(std::vector<Token> tokens) const override {
    for (auto& t : tokens) t.tag = tag_word(t.text);
    return tokens;
  }

  // exact lexicon entry, then suffix rules, then NN.
  std::string tag_word(const std::string& word) const {
    if (word.starts_with(kCiteOpen)) return std::string(kCiteTag);
    if (const auto* tag = lexicon_.find(word)) return *tag;
    if (has_noun_suffix(word)) return "NN";
    using detail::ends_with;
    if (ends_with(word, "al") || ends_with(word, "ive") || ends_with(word, "ous") ||
        ends_with(word, "able")) {
      return "JJ";
    }
    if (ends_with(word, "ly")) return "RB";
    if (word.size() > 4 && ends_with(word, "ed")) return "VBN";
    if (word.size() > 5 && ends_with(word, "ing")) return "VBG";
    if (is_plural_noun(word)) return "NNS";
    return "NN";
  }

  const Lexicon& lexicon() const { return lexicon_; }

 private:
  static bool has_noun_suffix(std::string_view w) {
    using detail::ends_with;
    return ends_with(w, "tion") || ends_with(w, "ment") || ends_with(w, "ness") ||
           ends_with(w, "ity");
  }

  bool is_known_noun(const std::string& stem) const {
    if (stem.size() < 2) return false;
    if (const auto* tag = lexicon_.find(stem)) return tag->starts_with("NN");
    return has_noun_suffix(stem);
  }

  bool is_plural_noun(const std::string& w) const {
    using detail::ends_with;
    if (!ends_with(w, "s") || ends_with(w, "ss")) return false;
    if (ends_with(w, "ies") && is_known_noun(w.substr(0, w.size() - 3) + "y")) return true;
    if (ends_with(w, "es") && is_known_noun(w.substr(0, w.size() - 2))) return true;
    return is_known_noun(w.substr(0, w.size() - 1));
  }

  Lexicon lexicon_;
};

inline std::vector<Token> pos_tag(std::vector<Token> tokens, const Lexicon& lexicon) {
  return LexiconTagger(lexicon).tag(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Noun-phrase chunking: <NN.*|JJ>*<NN.*>

/// Positions [begin, end) into the tagged token list.
struct PhraseSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const PhraseSpan&, const PhraseSpan&) = default;
};

inline bool is_noun_tag(std::string_view tag) { return tag.starts_with("NN"); }

/// Greedy, left-to-right, non-overlapping matches. Each run of NN.*/JJ
/// tokens yields at most one phrase, ending at the run's last NN.* token.
inline std::vector<PhraseSpan> chunk_noun_phrases(const std::vector<Token>& tagged) {
  std::vector<PhraseSpan> out;
  std::size_t i = 0;
  while (i < tagged.size()) {
    const auto& tag = tagged[i].tag;
    if (!is_noun_tag(tag) && tag != "JJ") {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t last_noun = tagged.size();
    while (j < tagged.size() && (is_noun_tag(tagged[j].tag) || tagged[j].tag == "JJ")) {
      if (is_noun_tag(tagged[j].tag)) last_noun = j;
      ++j;
    }
    if (last_noun != tagged.size()) out.push_back({i, last_noun + 1});
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Paragraphs and citation markers

/// Splits on runs of blank (whitespace-only) lines; each paragraph is trimmed.
inline std::vector<Paragraph> split_paragraphs(std::string_view text) {
  std::vector<Paragraph> out;
  std::size_t block_begin = std::string_view::npos;
  std::size_t block_end = 0;
  auto flush = [&] {
    if (block_begin == std::string_view::npos) return;
    const auto raw = text.substr(block_begin, block_end - block_begin);
    const auto trimmed = detail::trim(raw);
    if (!trimmed.empty()) {
      const auto b = block_begin + static_cast<std::size_t>(trimmed.data() - raw.data());
      out.push_back(Paragraph{out.size(), std::string(trimmed), {b, b + trimmed.size()}});
    }
    block_begin = std::string_view::npos;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    if (detail::trim(line).empty()) {
      flush();
    } else {
      if (block_begin == std::string_view::npos) block_begin = pos;
      block_end = nl;
    }
    if (nl == text.size()) break;
    pos = nl + 1;
  }
  flush();
  return out;
}

inline std::vector<CitationMarker> locate_citation_markers(const std::vector<Token>& tokens) {
  std::vector<CitationMarker> out;
  for (const auto& t : tokens) {
    if (!is_citation_token(t)) continue;
    const std::string_view text = t.text;
    const bool closed = detail::ends_with(text, kCiteClose) &&
                        text.size() >= kCiteOpen.size() + kCiteClose.size();
    const auto id = closed ? text.substr(kCiteOpen.size(),
                                         text.size() - kCiteOpen.size() - kCiteClose.size())
                           : std::string_view{};
    if (!closed || !is_valid_document_id(id)) {
      throw ParseError("malformed citation marker '" + t.text + "' at bytes [" +
                       std::to_string(t.span.begin) + ", " + std::to_string(t.span.end) + ")");
    }
    out.push_back(CitationMarker{std::string(id), t.index, t.span});
  }
  return out;
}

}  // namespace pcr

// Copyright 2026 The lcwl Authors.
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

#include "lcwl/textcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "lcwl/error.hpp"

namespace lcwl {
namespace {

bool is_space(unsigned char c) { return c <= 0x20 || c == 0x7f; }

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

bool is_word_byte(unsigned char c) { return is_ascii_alnum(c) || c >= 0x80; }

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

bool is_consonant(char c) { return c >= 'a' && c <= 'z' && !is_vowel(c); }

std::size_t code_points(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Tokens tokenize_lenient(std::string_view text) {
  Tokens out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(std::move(word));
      word.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (is_space(c)) {
      flush();
    } else {
      flush();
      out.emplace_back(1, ch);
    }
  }
  flush();
  return out;
}

TokenizedSentence tokenize(std::string_view text) {
  TokenizedSentence s;
  s.raw = std::string(text);
  s.tokens = tokenize_lenient(text);
  if (s.tokens.empty()) throw EmptyInput("tokenize: no tokens in input");
  for (const auto& t : s.tokens) s.char_count += code_points(t);
  return s;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

bool is_word_token(std::string_view token) {
  return std::any_of(token.begin(), token.end(), [](char c) {
    return is_word_byte(static_cast<unsigned char>(c));
  });
}

std::size_t count_word_tokens(const Tokens& tokens) {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(),
                    [](const std::string& t) { return is_word_token(t); }));
}

int count_syllables(std::string_view word) {
  std::string w;
  for (char c : word) {
    w.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  int groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const std::size_t n = w.size();
  // Silent final "e" after a consonant, except the consonant+"le" ending.
  if (n >= 2 && w[n - 1] == 'e' && is_consonant(w[n - 2])) {
    const bool consonant_le = w[n - 2] == 'l' && n >= 3 && is_consonant(w[n - 3]);
    if (!consonant_le) --groups;
  }
  return std::max(groups, 1);
}

std::vector<TokenizedSentence> split_sentences(std::string_view text) {
  std::vector<TokenizedSentence> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    const auto piece = text.substr(start, end - start);
    if (!tokenize_lenient(piece).empty()) out.push_back(tokenize(piece));
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminal(text[i]) &&
        (i + 1 == text.size() || is_space(static_cast<unsigned char>(text[i + 1])))) {
      emit(i + 1);
    }
  }
  if (start < text.size()) emit(text.size());
  return out;
}

double fkgl(const std::vector<TokenizedSentence>& sentences) {
  std::size_t words = 0, with_words = 0;
  long syllables = 0;
  for (const auto& s : sentences) {
    std::size_t here = 0;
    for (const auto& t : s.tokens) {
      if (!is_word_token(t)) continue;
      ++here;
      syllables += count_syllables(t);
    }
    words += here;
    if (here) ++with_words;
  }
  if (words == 0) throw EmptyInput("fkgl: no words");
  const double w = static_cast<double>(words);
  return 0.39 * (w / static_cast<double>(with_words)) +
         11.8 * (static_cast<double>(syllables) / w) - 15.59;
}

double fkgl(std::string_view text) { return fkgl(split_sentences(text)); }

FrequencyTable FrequencyTable::from_ranked(const std::vector<std::string>& ranked) {
  FrequencyTable t;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    t.ranks_.try_emplace(ranked[i], i + 1);
  }
  t.size_ = ranked.size();
  return t;
}

FrequencyTable FrequencyTable::from_corpus(const std::vector<Tokens>& corpus) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      if (is_word_token(tok)) ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  std::vector<std::string> ranked;
  ranked.reserve(items.size());
  for (auto& [tok, _] : items) ranked.push_back(tok);
  return from_ranked(ranked);
}

FrequencyTable FrequencyTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open frequency table " + path.string());
  FrequencyTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = trim(line);
    if (!tok.empty()) t.ranks_.try_emplace(tok, lineno);
  }
  t.size_ = lineno;
  return t;
}

std::size_t FrequencyTable::rank(const std::string& token) const {
  const auto it = ranks_.find(token);
  return it == ranks_.end() ? size_ + 1 : it->second;
}

std::vector<std::string> FrequencyTable::ranked_tokens() const {
  std::vector<std::string> out(size_);
  for (const auto& [tok, r] : ranks_) out[r - 1] = tok;
  return out;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {"n_chars", "n_words",
                                                 "mean_log_word_rank", "fkgl"};
  return names;
}

std::vector<double> to_vector(const FeatureVector& f) {
  return {f.n_chars, f.n_words, f.mean_log_word_rank, f.fkgl};
}

FeatureVector extract_features(const TokenizedSentence& sentence,
                               const FrequencyTable& table) {
  FeatureVector f;
  double log_rank_sum = 0;
  std::size_t words = 0;
  for (const auto& t : sentence.tokens) {
    if (!is_word_token(t)) continue;
    ++words;
    log_rank_sum += std::log(static_cast<double>(table.rank(t)));
  }
  if (words == 0) throw EmptyInput("extract_features: no word tokens");
  std::size_t chars = sentence.char_count;
  if (chars == 0) {
    for (const auto& t : sentence.tokens) chars += code_points(t);
  }
  f.n_chars = static_cast<double>(chars);
  f.n_words = static_cast<double>(words);
  f.mean_log_word_rank = log_rank_sum / static_cast<double>(words);
  f.fkgl = fkgl(join_tokens(sentence.tokens));
  return f;
}

}  // namespace lcwl

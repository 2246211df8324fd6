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

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lcwl {

using Tokens = std::vector<std::string>;

struct TokenizedSentence {
  std::string raw;
  Tokens tokens;
  /// Non-whitespace characters (UTF-8 code points) covered by the tokens.
  std::size_t char_count = 0;
};

/// Lowercases ASCII letters, splits every punctuation mark into its own
/// token and drops whitespace. Bytes >= 0x80 are treated as word characters.
/// Throws EmptyInput when no token remains.
TokenizedSentence tokenize(std::string_view text);

/// Same tokens as tokenize() but returns an empty list instead of throwing.
Tokens tokenize_lenient(std::string_view text);

std::string join_tokens(const Tokens& tokens);

/// A token counts as a word when it holds at least one letter or digit
/// (or a non-ASCII byte).
bool is_word_token(std::string_view token);

std::size_t count_word_tokens(const Tokens& tokens);

/// Vowel-group syllable estimate, at least 1.
int count_syllables(std::string_view word);

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
std::vector<TokenizedSentence> split_sentences(std::string_view text);

/// Flesch-Kincaid grade level over the module's sentence and syllable rules.
double fkgl(std::string_view text);
double fkgl(const std::vector<TokenizedSentence>& sentences);

/// Word -> 1-based frequency rank. Unknown words read as rank size()+1.
class FrequencyTable {
 public:
  FrequencyTable() = default;

  /// Tokens in rank order; a repeated token keeps its first rank.
  static FrequencyTable from_ranked(const std::vector<std::string>& ranked);

  /// Ranks tokens by descending count, ties broken lexicographically.
  static FrequencyTable from_corpus(const std::vector<Tokens>& corpus);

  /// One token per line, line number = rank. Lines are trimmed; blank lines
  /// keep their line number but add no entry.
  static FrequencyTable load(const std::filesystem::path& path);

  std::size_t rank(const std::string& token) const;
  std::size_t size() const { return size_; }

  /// Entries in ascending rank order (the serialized form).
  std::vector<std::string> ranked_tokens() const;

 private:
  std::unordered_map<std::string, std::size_t> ranks_;
  std::size_t size_ = 0;
};

struct FeatureVector {
  double n_chars = 0;
  double n_words = 0;
  double mean_log_word_rank = 0;
  double fkgl = 0;
};

inline constexpr std::size_t kFeatureDim = 4;

/// Fixed feature order used by the classifier.
const std::vector<std::string>& feature_names();

std::vector<double> to_vector(const FeatureVector& f);

/// Throws EmptyInput when the sentence has no word tokens.
FeatureVector extract_features(const TokenizedSentence& sentence,
                               const FrequencyTable& table);

}  // namespace lcwl

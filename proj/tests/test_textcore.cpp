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

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "lcwl/error.hpp"
#include "lcwl/rng.hpp"
#include "lcwl/textcore.hpp"
#include "test_util.hpp"

using namespace lcwl;

TEST_CASE("tokenize lowercases and splits punctuation") {
  const auto s = tokenize("The cat.");
  CHECK(s.tokens == Tokens{"the", "cat", "."});
  CHECK(s.raw == "The cat.");
  CHECK(s.char_count == 7);
  CHECK(tokenize("A  B").tokens == Tokens{"a", "b"});
  CHECK(tokenize("don't!").tokens == Tokens{"don", "'", "t", "!"});
}

TEST_CASE("tokenize rejects inputs without tokens") {
  CHECK_THROWS_AS(tokenize(""), EmptyInput);
  CHECK_THROWS_AS(tokenize("   \t\n"), EmptyInput);
  CHECK(tokenize_lenient("  ").empty());
}

TEST_CASE("tokenize keeps non-ascii bytes inside words") {
  const auto s = tokenize("Café au lait");
  REQUIRE(s.tokens.size() == 3);
  CHECK(s.tokens[0] == "café");
}

TEST_CASE("tokenization is idempotent on random strings") {
  Rng rng(11);
  const std::string alphabet = "abcXYZ019 .,!?'-\t";
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto len = 1 + rng.below(30);
    for (std::uint64_t i = 0; i < len; ++i) text += alphabet[rng.below(alphabet.size())];
    const auto first = tokenize_lenient(text);
    CHECK(tokenize_lenient(join_tokens(first)) == first);
  }
}

TEST_CASE("syllable counts") {
  CHECK(count_syllables("cat") == 1);
  CHECK(count_syllables("table") == 2);
  CHECK(count_syllables("strength") == 1);
  CHECK(count_syllables("make") == 1);
  CHECK(count_syllables("automobile") == 4);
  CHECK(count_syllables("rhythm") == 1);
  CHECK(count_syllables("xyz") == 1);
  CHECK(count_syllables("b") == 1);
  CHECK(count_syllables("Beautiful") == 3);
}

TEST_CASE("syllable count is at least one for any word") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::string w;
    const auto len = 1 + rng.below(8);
    for (std::uint64_t i = 0; i < len; ++i) w += static_cast<char>('a' + rng.below(26));
    CHECK(count_syllables(w) >= 1);
  }
}

TEST_CASE("sentence splitting") {
  CHECK(split_sentences("Go. Stop.").size() == 2);
  CHECK(split_sentences("no punctuation").size() == 1);
  CHECK(split_sentences("Dr. Smith left.").size() == 2);
  CHECK(split_sentences("3.14 is pi.").size() == 1);
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("Wait! What? Yes.").size() == 3);
}

TEST_CASE("fkgl values") {
  CHECK(std::fabs(fkgl("Go.") - (-3.40)) < 1e-9);
  CHECK(std::fabs(fkgl("The cat sat on the mat.") - (-1.45)) < 1e-9);
  CHECK_THROWS_AS(fkgl(""), EmptyInput);
  CHECK_THROWS_AS(fkgl("..."), EmptyInput);
  // Two sentences of lengths 2 and 4; "every" has three vowel groups.
  const double expected = 0.39 * (6.0 / 2.0) + 11.8 * (8.0 / 6.0) - 15.59;
  CHECK(std::fabs(fkgl("Cats sleep. Dogs chase every ball.") - expected) < 1e-12);
}

TEST_CASE("fkgl is unchanged by repeating the whole text") {
  for (const char* t : {"The cat sat on the mat.", "An automobile arrived. It was red!",
                        "Simple words only?"}) {
    const std::string once = t;
    const std::string twice = once + " " + once;
    CHECK(std::fabs(fkgl(once) - fkgl(twice)) < 1e-9);
  }
}

TEST_CASE("frequency table ranks") {
  const auto t = FrequencyTable::from_ranked({"the", "cat", "the", "dog"});
  CHECK(t.rank("the") == 1);
  CHECK(t.rank("cat") == 2);
  // Positions behave like file lines: the duplicate still occupies rank 3.
  CHECK(t.rank("dog") == 4);
  CHECK(t.size() == 4);
  CHECK(t.rank("zebra") == 5);

  const auto c = FrequencyTable::from_corpus({{"b", "a", "b"}, {"c", "a"}});
  CHECK(c.ranked_tokens() == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("frequency table file uses line numbers") {
  testing::TempDir dir("freq");
  {
    std::ofstream out(dir / "freq.txt");
    out << "  the \ncat\n\ndog\ncat\n";
  }
  const auto t = FrequencyTable::load(dir / "freq.txt");
  CHECK(t.rank("the") == 1);
  CHECK(t.rank("cat") == 2);
  CHECK(t.rank("dog") == 4);
  CHECK_THROWS_AS(FrequencyTable::load(dir / "missing.txt"), IoError);
}

TEST_CASE("feature extraction") {
  const auto table = FrequencyTable::from_ranked({"the", "cat"});
  const auto f = extract_features(tokenize("the cat"), table);
  CHECK(f.n_words == 2);
  CHECK(f.n_chars == 6);
  CHECK(std::fabs(f.mean_log_word_rank - (std::log(1.0) + std::log(2.0)) / 2) < 1e-12);
  CHECK(std::fabs(f.mean_log_word_rank - 0.3466) < 1e-4);

  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("w" + std::to_string(i));
  const auto g = extract_features(tokenize("zebra ."), FrequencyTable::from_ranked(ten));
  CHECK(g.n_words == 1);
  CHECK(std::fabs(g.mean_log_word_rank - std::log(11.0)) < 1e-12);

  CHECK_THROWS_AS(extract_features(tokenize("."), table), EmptyInput);
}

TEST_CASE("feature invariants and determinism") {
  const auto table = FrequencyTable::from_ranked({"a", "b", "c"});
  for (const char* t : {"a b c .", "Unknown words, everywhere!", "x"}) {
    const auto s = tokenize(t);
    const auto f1 = extract_features(s, table);
    const auto f2 = extract_features(s, table);
    CHECK(to_vector(f1) == to_vector(f2));
    CHECK(f1.n_words >= 1);
    CHECK(f1.n_chars >= f1.n_words);
    CHECK(f1.mean_log_word_rank >= 0);
  }
  CHECK(feature_names().size() == kFeatureDim);
}

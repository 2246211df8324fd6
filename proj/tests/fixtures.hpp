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

// Hand-built fixtures shared by the unit tests and the acceptance run.

#include <optional>
#include <string>
#include <vector>

#include "lcwl/metrics.hpp"
#include "lcwl/pseudolabel.hpp"

namespace fixtures {

struct FilterCase {
  lcwl::ParaphrasePair pair;
  std::optional<lcwl::FilterRule> expected;
};

// Fifty pairs: ten per removal rule plus ten that survive. Each removed pair
// trips only its own rule.
inline std::vector<FilterCase> filter_cases() {
  using lcwl::FilterRule;
  const std::vector<std::string> nouns = {"cat",   "dog",  "bird", "horse", "fish",
                                          "mouse", "frog", "goat", "sheep", "duck"};
  std::vector<FilterCase> out;
  for (const auto& n : nouns) {
    out.push_back({{"The " + n + " sat on the mat.", "the " + n + " sat on the mat ."},
                   FilterRule::kIdentical});
    out.push_back({{"the " + n + " sat on the mat", "yesterday the " + n + " sat on the mat"},
                   FilterRule::kContained});
    out.push_back({{"12 34 56 78", "the " + n + " has four numbers"}, FilterRule::kNoLetters});
    out.push_back({{"big " + n, "a very large " + n + " appeared"}, FilterRule::kTooShort});
    out.push_back({{"the " + n + " sat on the mat", "a " + n + " was resting on a rug"},
                   std::nullopt});
  }
  return out;
}

struct BleuCase {
  lcwl::SentencePair pair;
  bool kept;
};

inline std::vector<BleuCase> bleu_filter_cases() {
  return {
      {{"the cat sat on the mat", "the cat sat on the mat"}, false},      // 1.0
      {{"red green blue", "one two three"}, false},                       // 0.0
      {{"the cat lay on the mat", "the dog sat on the mat"}, true},       // 0.427
      {{"the cat sat", "the cat sat down"}, true},                        // 0.717
      {{"he went home early today", "he went home late yesterday"}, true},  // 0.495
      {{"a b c d e f g h", "a b c d e f g x"}, true},                     // 0.860
      {{"a b c d e f g h i j k", "a b c d e f g h i j z"}, false},        // 0.902
      {{"x y z w", "x q r s"}, true},                                     // 0.319
  };
}

}  // namespace fixtures

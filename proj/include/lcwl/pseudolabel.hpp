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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcwl/classifier.hpp"

namespace lcwl {

struct ParaphrasePair {
  std::string source;
  std::string target;
};

/// One pseudo-labeled pair. `weight` is always src_weight * tgt_weight.
struct PseudoExample {
  std::string source;
  std::string target;
  int src_level = 0;
  int tgt_level = 0;
  double src_conf = 0;
  double tgt_conf = 0;
  double src_weight = 0;
  double tgt_weight = 0;
  double weight = 0;
};

/// Corpus cleaning rules, checked in this order; the first hit is reported.
enum class FilterRule { kIdentical = 0, kContained, kNoLetters, kTooShort };
inline constexpr std::size_t kNumFilterRules = 4;
inline constexpr std::size_t kMinWords = 3;

const char* to_string(FilterRule rule);

/// The rule that rejects the pair, or nullopt when it survives.
std::optional<FilterRule> rejection_rule(const ParaphrasePair& pair);

struct FilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::array<std::size_t, kNumFilterRules> removed{};
};

/// Survivors in input order.
std::vector<ParaphrasePair> filter_paraphrases(const std::vector<ParaphrasePair>& pairs,
                                               FilterReport* report = nullptr);

/// Geometric mean sqrt(precision * confidence); both arguments in [0, 1].
double confidence_weight(double precision, double confidence);

PseudoExample label_pair(const ClassifierModel& model, const PrecisionProfile& precisions,
                         const ParaphrasePair& pair);

struct PseudoCorpus {
  std::vector<PseudoExample> examples;
  FilterReport filter;
};

/// filter_paraphrases, then label_pair over the survivors in input order.
PseudoCorpus build_pseudo_corpus(const ClassifierModel& model, const PrecisionProfile& precisions,
                                 const std::vector<ParaphrasePair>& pairs);

/// Replaces the target-side pseudo-label of each example, independently with
/// probability `rate`, by a uniformly drawn different level in [1, max_level].
/// The target confidence becomes the classifier's probability for the new
/// label and the weights are recomputed. Returns the flip mask.
std::vector<bool> corrupt_target_labels(std::vector<PseudoExample>& examples,
                                        const ClassifierModel& model,
                                        const PrecisionProfile& precisions, double rate,
                                        int max_level, std::uint64_t seed);

/// Two-column TSV (source, target).
std::vector<ParaphrasePair> load_paraphrase_tsv(const std::filesystem::path& path);
std::string paraphrases_to_tsv(const std::vector<ParaphrasePair>& pairs);

std::string pseudo_to_jsonl(const std::vector<PseudoExample>& examples);
/// Reads the JSONL written by pseudo_to_jsonl. The file does not carry side
/// weights; they stay 0 until recompute_side_weights() is called.
std::vector<PseudoExample> load_pseudo_jsonl(const std::filesystem::path& path);

void recompute_side_weights(std::vector<PseudoExample>& examples,
                            const PrecisionProfile& precisions);

std::string format_filter_report(const FilterReport& report);

}  // namespace lcwl

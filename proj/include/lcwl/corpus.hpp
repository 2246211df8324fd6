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
#include <string>
#include <vector>

#include "lcwl/classifier.hpp"
#include "lcwl/pseudolabel.hpp"
#include "lcwl/rng.hpp"
#include "lcwl/textcore.hpp"

namespace lcwl {

struct ParallelExample {
  std::string source;
  std::string target;
  int level = 1;  // 1..K
};

struct ParallelDataset {
  int levels = 4;  // K
  std::vector<ParallelExample> examples;
  std::string provenance;  // "file:<path>" or "synthetic:<seed>"
};

enum class DataFormat { kTsv, kJsonl };

/// TSV rows are source<TAB>target<TAB>level; JSONL rows are
/// {"source", "target", "level"}. Levels must lie in [1, levels]. Throws
/// ParseError with the 1-based row on the first malformed row.
ParallelDataset load_parallel(const std::filesystem::path& path, DataFormat format, int levels);
DataFormat format_from_path(const std::filesystem::path& path);
std::string parallel_to_tsv(const ParallelDataset& data);
std::string parallel_to_jsonl(const ParallelDataset& data);

/// Concept with one surface form per level: forms[0] is the most complex,
/// forms[K] the simplest.
struct ConceptChain {
  std::string category;  // slot name used by templates, e.g. "NOUN"
  std::vector<std::string> forms;
};

/// Template-driven generator for multi-level simplification data. Template
/// slots are category names; a trailing '?' marks a slot that is filled
/// with probability `optional_probability`. Any other entry is a literal.
/// Level k uses tier-k forms for every concept and, for
/// k >= ceil(K/2), drops all subordinate clauses.
struct SyntheticGrammar {
  int levels = 4;
  std::vector<ConceptChain> concepts;
  std::vector<std::string> main_template;
  std::vector<std::string> clause_template;
  std::vector<std::string> connectors;  // filled into "CONN" slots
  double optional_probability = 0.5;
  int max_clauses = 2;

  int clause_drop_level() const { return (levels + 1) / 2; }
};

SyntheticGrammar default_grammar();
std::string grammar_to_json(const SyntheticGrammar& g);
SyntheticGrammar grammar_from_json(const std::string& text);
SyntheticGrammar load_grammar(const std::filesystem::path& path);
/// Throws ConfigError on missing tiers, duplicated forms, or unknown slots.
void validate_grammar(const SyntheticGrammar& g);

/// Frequency ranking implied by the grammar: literals and connectors first,
/// then concept forms from the simplest tier to the most complex.
FrequencyTable grammar_frequency_table(const SyntheticGrammar& g);

/// Word-token count plus (K - tier) for every concept form.
double complexity_score(const SyntheticGrammar& g, const Tokens& tokens);

/// A slot filled either with a concept (rendered per level) or a literal.
struct PlanItem {
  int concept_id = -1;
  std::string literal;
};

/// Level-independent sentence skeleton.
struct SentencePlan {
  std::vector<PlanItem> main;
  std::vector<std::vector<PlanItem>> clauses;
};

SentencePlan sample_plan(const SyntheticGrammar& g, Rng& rng);
std::string render(const SyntheticGrammar& g, const SentencePlan& plan, int level);

struct SyntheticCorpus {
  ParallelDataset dataset;               // (complex, simplified at level k, k)
  std::vector<ParaphrasePair> pairs;     // same pairs without levels
  std::vector<int> hidden_source_levels; // evaluation only
  std::vector<int> hidden_target_levels;
};

SyntheticCorpus synth_generate(const SyntheticGrammar& g, std::size_t n, std::uint64_t seed);

/// Flips each level independently with probability `rate` to a uniformly
/// drawn different level in [lo, hi]. Returns the flip mask.
std::vector<bool> inject_level_noise(std::vector<int>& levels, int lo, int hi, double rate,
                                     std::uint64_t seed);

struct NoisyDataset {
  ParallelDataset dataset;
  std::vector<bool> flipped;
};

NoisyDataset inject_label_noise(const ParallelDataset& data, double rate, std::uint64_t seed);

/// Deterministic shuffled partition. Sizes are floor(ratio * n) with the
/// remainder handed to train, val, test in that order. All ratios must be
/// positive and sum to 1 within 1e-9 (RatioError otherwise).
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, std::array<double, 3> ratios,
                                                      std::uint64_t seed);
std::array<ParallelDataset, 3> split(const ParallelDataset& data, std::array<double, 3> ratios,
                                     std::uint64_t seed);

/// Each pair yields (source, 0) and (target, level).
std::vector<LabeledSentence> to_labeled_sentences(const ParallelDataset& data);

}  // namespace lcwl

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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcwl/textcore.hpp"

namespace lcwl {

struct MetricScores {
  double sari = 0;        // [0, 100]
  double bleu = 0;        // [0, 1]
  double fkgl = 0;
  double delta_fkgl = 0;
};

/// Sentence BLEU up to 4-grams. Clipped counts against the best reference,
/// brevity penalty against the closest-length reference (shorter wins ties),
/// add-one smoothing for n >= 2. A zero unigram match gives 0.
double bleu(const Tokens& hyp, const std::vector<Tokens>& refs);

/// Keep, add and delete components of SARI for one n-gram order.
struct SariComponents {
  double keep_f1 = 0;
  double add_f1 = 0;
  double delete_precision = 0;
};

SariComponents sari_ngram(const Tokens& source, const Tokens& hyp,
                          const std::vector<Tokens>& refs, int n);

/// SARI in [0, 100]: mean over n = 1..4 of (keep F1 + add F1 + delete
/// precision) / 3. Empty operation sets (0/0 ratios) score 1.
double sari(const Tokens& source, const Tokens& hyp, const std::vector<Tokens>& refs);

/// fkgl(source) - fkgl(hyp); positive when the output reads simpler.
double delta_fkgl(std::string_view source, std::string_view hyp);

using SentencePair = std::pair<std::string, std::string>;

/// Keeps pairs with lo <= bleu(first, [second]) <= hi. Pairs that do not
/// tokenize are dropped.
std::vector<SentencePair> pairwise_bleu_filter(const std::vector<SentencePair>& pairs,
                                               double lo = 0.1, double hi = 0.9);

struct RankDirection {
  enum class Kind { kHigherBetter, kCloserTo };
  Kind kind = Kind::kHigherBetter;
  double target = 0;

  static RankDirection higher_better() { return {}; }
  static RankDirection closer_to(double t) { return {Kind::kCloserTo, t}; }
};

/// Ordered (metric, direction) list; the order fixes the report columns.
using MetricDirections = std::vector<std::pair<std::string, RankDirection>>;

/// Ordered (system, metric -> score) list.
using SystemScores = std::vector<std::pair<std::string, std::map<std::string, double>>>;

struct RankTable {
  std::vector<std::string> systems;
  std::vector<std::string> metrics;
  /// metric -> rank per system (same order as `systems`).
  std::map<std::string, std::vector<double>> per_metric_ranks;
  std::map<std::string, double> average_rank;
};

/// Rank 1 is best; ties share the mean of their positions. Throws
/// MissingScore when any (system, metric) cell is absent.
RankTable average_rank(const SystemScores& scores, const MetricDirections& directions);

/// TSV with one row per system: each metric's score and rank, then the
/// average rank.
std::string format_rank_table(const RankTable& table, const SystemScores& scores);

/// JSON Lines: {"system": str, "scores": {metric: number}} per line.
SystemScores read_scores_jsonl(const std::filesystem::path& path);
std::string scores_to_jsonl(const SystemScores& scores);

}  // namespace lcwl

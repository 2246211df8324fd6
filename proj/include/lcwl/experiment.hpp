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
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "lcwl/classifier.hpp"
#include "lcwl/corpus.hpp"
#include "lcwl/metrics.hpp"
#include "lcwl/pseudolabel.hpp"
#include "lcwl/seq2seq.hpp"

namespace lcwl {

/// One cell of the method matrix. SCE changes the classifier loss, LCWL the
/// generator loss, FT adds gold fine-tuning; the three axes are independent.
struct MethodSpec {
  std::string name;
  bool sce_classifier = false;
  bool lcwl_weights = false;
  bool fine_tune = false;

  /// Name without the "+ft" suffix.
  std::string base_name() const;
};

/// Accepts baseline_unweighted, lcwl, sce, lcwl_sce, each optionally with
/// a "+ft" suffix. Throws ConfigError otherwise.
MethodSpec parse_method(const std::string& name);

enum class LevelToken { kTarget, kSource };

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // empty: {seed}
  int levels = 4;
  std::string grammar;  // empty: built-in grammar
  std::size_t gold_size = 400;
  std::size_t paraphrase_size = 2000;
  std::array<double, 3> split = {0.6, 0.2, 0.2};
  double classifier_label_noise = 0.0;
  double pseudo_label_noise = 0.4;
  bool bleu_filter = false;
  double bleu_lo = 0.1;
  double bleu_hi = 0.9;
  LevelToken level_token = LevelToken::kTarget;
  std::string classifier_loss = "ce";  // standalone train-classifier only
  ClassifierTrainConfig classifier;
  LossSpec sce = LossSpec::symmetric(0.1, 1.0, -4.0);
  std::size_t d_model = 32;
  double init_scale = 0.1;
  std::size_t min_freq = 1;
  Seq2SeqTrainConfig generator;
  Seq2SeqTrainConfig fine_tune;
  std::vector<std::string> methods = {"baseline_unweighted", "lcwl", "lcwl+ft"};
  std::vector<std::string> metrics = {"sari", "bleu", "fkgl", "delta_fkgl"};
  std::string out = "runs/experiment";

  ExperimentConfig();
  std::vector<std::uint64_t> effective_seeds() const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError before any work starts. Missing keys take the defaults above.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every effective field, including defaults.
std::string config_to_json(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

SyntheticGrammar resolve_grammar(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Pipeline stages (shared by the CLI commands and the experiment driver)
// ---------------------------------------------------------------------------

struct ClassifierStage {
  ClassifierModel model;
  PrecisionProfile precision;
  ClassificationSummary summary;
};

/// Trains on `train`, measures precision and the summary on `val`, and writes
/// classifier.json, precision.json and classifier_summary.tsv under `out`
/// (names prefixed by `tag` when non-empty). Nothing is written on failure.
ClassifierStage stage_train_classifier(const ExperimentConfig& config, const LossSpec& loss,
                                       const std::vector<LabeledSentence>& train,
                                       const std::vector<LabeledSentence>& val,
                                       const FrequencyTable& table, std::uint64_t seed,
                                       const std::filesystem::path& out, const std::string& tag);

struct PseudoStage {
  PseudoCorpus corpus;
  std::vector<PseudoExample> clean;       // labels before corruption
  std::vector<std::size_t> kept_indices;  // input positions of survivors
  std::vector<bool> corrupted;
};

/// Filters, pseudo-labels, optionally BLEU-filters, then corrupts target
/// labels at the configured rate. Writes pseudo.jsonl and filter_summary.tsv.
PseudoStage stage_pseudo_label(const ExperimentConfig& config, const ClassifierModel& model,
                               const PrecisionProfile& precision,
                               const std::vector<ParaphrasePair>& pairs, std::uint64_t seed,
                               const std::filesystem::path& out, const std::string& tag);

/// Generator training pairs from a pseudo-corpus: the conditioning level is
/// the configured side's pseudo-label; pairs whose level is outside 1..K are
/// skipped. LCWL keeps the stored weight, everything else uses 1.
std::vector<WeightedPair> generator_pairs(const ExperimentConfig& config,
                                          const std::vector<PseudoExample>& corpus,
                                          bool lcwl_weights, std::size_t* skipped = nullptr);

Vocab build_generator_vocab(const std::vector<WeightedPair>& pairs, int levels,
                            std::size_t min_freq);

/// Writes generator.json and loss_curve.csv (names prefixed by `tag`).
TrainResult stage_train_generator(const ExperimentConfig& config,
                                  const std::vector<PseudoExample>& corpus, bool lcwl_weights,
                                  std::uint64_t seed, const std::filesystem::path& out,
                                  const std::string& tag);

TrainResult stage_fine_tune(const ExperimentConfig& config, Seq2SeqModel model,
                            const ParallelDataset& gold, std::uint64_t seed,
                            const std::filesystem::path& out, const std::string& tag);

struct LevelScores {
  std::size_t count = 0;
  std::size_t empty_outputs = 0;
  MetricScores scores;
};

struct EvaluationReport {
  std::map<int, LevelScores> per_level;  // level 0 holds the overall row
  LevelScores reference;                  // references scored as hypotheses
};

/// Scores hypotheses against a parallel test set. Empty hypotheses score 0
/// on SARI and BLEU and are left out of the FKGL averages.
EvaluationReport evaluate_hypotheses(const ParallelDataset& test,
                                     const std::vector<Tokens>& hypotheses);

std::vector<Tokens> generate_for(const Seq2SeqModel& model, const ParallelDataset& test,
                                 std::size_t max_len);

std::string format_evaluation_tsv(const EvaluationReport& report);

/// Overall metric cells for a scores file.
std::map<std::string, double> score_cells(const EvaluationReport& report,
                                          const std::vector<std::string>& metrics);

/// sari/bleu: higher is better; fkgl/delta_fkgl: closer to the reference rows.
MetricDirections default_directions(const std::vector<std::string>& metrics,
                                    const EvaluationReport& reference_source);

// ---------------------------------------------------------------------------
// Full experiment
// ---------------------------------------------------------------------------

struct MethodResult {
  std::string method;
  EvaluationReport evaluation;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::map<std::string, double> classifier_accuracy;  // "ce"/"sce" -> val accuracy
  /// Mean weight over pseudo-examples whose two labels match the hidden
  /// levels, and over the rest (before label corruption).
  std::map<std::string, std::pair<double, double>> weight_separation;
  std::vector<MethodResult> methods;
  RankTable ranks;
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  std::filesystem::path dir;
};

/// Runs every configured method for every seed and writes the run directory:
/// config.json, per-seed artifacts, summary.tsv and manifest.json.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Mean SARI of a method across seeds.
double mean_sari(const ExperimentResult& result, const std::string& method);

}  // namespace lcwl
